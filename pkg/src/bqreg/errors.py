"""Exception hierarchy shared across the package.

Argument-domain violations (a tau outside (0,1), a non-positive scale)
raise plain ``ValueError``.  The classes below mark failures that callers
may want to route differently: bad data versus numerical breakdown.
"""


class BqregError(Exception):
    """Base class for package-specific failures."""


class DataError(BqregError):
    """Input data violates a structural requirement (missing values,
    unseen categorical level, rank deficiency, degenerate response)."""


class NumericalError(BqregError):
    """A numerical routine broke down (failed factorization, divergent
    chain state)."""

"""Seeded random-variate generators for the Gibbs full conditionals.

Three primitives: a one-sided truncated normal (truncation point fixed at
zero, matching the latent-response conditionals), a generalized inverse
Gaussian with index 1/2, and a multivariate normal.  Every entry point takes
an explicit :class:`RngHandle`; none of them touches global RNG state.

The truncated normal inverts the conditional CDF in the bulk and switches
to Robert's exponential-proposal rejection once the standardized truncation
bound moves past ``TAIL_REGIME_BOUND`` into the kept tail, where CDF
inversion runs out of digits but the exponential proposal keeps a constant
acceptance probability.

The GIG(1/2) draw is rejection-free: the reciprocal of a GIG(1/2, chi, psi)
variate is inverse Gaussian, which is sampled exactly with the classic
transformation-with-roots method and then inverted.  ``chi == 0`` (and
values small enough to overflow the transformation's intermediates) falls
back to the exact limiting Gamma(1/2, rate psi/2) law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import NumericalError

# Standardized lower bound above which the exponential-proposal rejection
# sampler takes over from CDF inversion (~0.5 sigma into the kept tail,
# where the conditional-CDF sum starts losing digits).
TAIL_REGIME_BOUND = 0.45

# Below this chi the inverse-Gaussian transformation overflows float64
# intermediates; the Gamma limit is exact there to within ~1e-140 in total
# variation.
GIG_GAMMA_CUTOFF = 1e-280

_UINT64_MAX = 2**64 - 1


@dataclass
class RngHandle:
    """Single-owner seeded generator; equal seeds give equal streams.

    Backed by PCG64 (period 2^128).  One handle per chain; never share a
    handle across threads.
    """

    seed: int
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.seed <= _UINT64_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.generator = np.random.Generator(np.random.PCG64(self.seed))


def derive_subseed(seed: int, index: int) -> int:
    """Deterministic 64-bit child seed for stream ``index`` of ``seed``.

    Used to give each quantile-grid chain an independent, reproducible
    stream regardless of evaluation order.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


class TruncationSide(Enum):
    """Half-line supports of the latent-response conditional."""

    NON_NEGATIVE = "non_negative"  # [0, +inf)
    NEGATIVE = "negative"  # (-inf, 0)


def _std_lower_truncated(a: np.ndarray, rng: RngHandle) -> np.ndarray:
    """Draws z ~ N(0,1) conditioned on z >= a, elementwise over ``a``."""
    gen = rng.generator
    out = np.empty_like(a)

    # Bulk regime: invert the conditional CDF.  The kept mass is at least
    # 1 - Phi(TAIL_REGIME_BOUND) ~ 0.33, so no precision is lost in the sum.
    idx = np.flatnonzero(a <= TAIL_REGIME_BOUND)
    if idx.size:
        bounds = a[idx]
        base = ndtr(bounds)
        z = ndtri(base + gen.random(idx.size) * (1.0 - base))
        out[idx] = np.maximum(z, bounds)

    # Tail regime: Robert's exponential-proposal rejection, whose acceptance
    # probability stays bounded away from zero however deep the bound sits.
    pending = np.flatnonzero(a > TAIL_REGIME_BOUND)
    bounds = a[pending]
    alphas = 0.5 * (bounds + np.sqrt(bounds * bounds + 4.0))
    while pending.size:
        z = bounds + gen.exponential(1.0 / alphas)
        log_accept = -0.5 * (z - alphas) ** 2
        ok = np.log(gen.random(pending.size)) <= log_accept
        out[pending[ok]] = z[ok]
        pending = pending[~ok]
        bounds = bounds[~ok]
        alphas = alphas[~ok]
    return out


def sample_truncated_normal(mean, variance, side: TruncationSide, rng: RngHandle):
    """Draw from N(mean, variance) restricted to one side of zero.

    ``side`` selects the support: [0, +inf) or (-inf, 0).  ``mean`` and
    ``variance`` broadcast elementwise; a scalar call returns a scalar.
    The draw is assembled as ``sd * (z - a)`` relative to the standardized
    bound ``a``, which keeps the support constraint exact in floating point
    even when the kept mass sits far into a tail.
    """
    mean = np.asarray(mean, dtype=np.float64)
    variance = np.asarray(variance, dtype=np.float64)
    if np.any(variance <= 0.0):
        raise ValueError("variance must be strictly positive")
    if not isinstance(side, TruncationSide):
        raise ValueError(f"side must be a TruncationSide, got {side!r}")

    scalar = mean.ndim == 0 and variance.ndim == 0
    mean, variance = np.broadcast_arrays(mean, variance)
    sd = np.sqrt(variance)
    if side is TruncationSide.NON_NEGATIVE:
        a = np.ravel(-mean / sd).astype(np.float64)
        z = _std_lower_truncated(a, rng)
        out = (np.ravel(sd) * (z - a)).reshape(mean.shape)
    else:
        a = np.ravel(mean / sd).astype(np.float64)
        z = _std_lower_truncated(a, rng)
        out = (-np.ravel(sd) * (z - a)).reshape(mean.shape)
    return float(out) if scalar else out


def _inverse_gaussian(mu: np.ndarray, lam, rng: RngHandle) -> np.ndarray:
    """Michael-Schucany-Haas draws from InverseGaussian(mu, lam).

    The smaller quadratic root is evaluated in the cancellation-free form
    ``mu * (1 - 2w / (w + sqrt(w*(4*lam + w))))`` with ``w = mu * z**2``.
    """
    gen = rng.generator
    y = gen.standard_normal(mu.shape) ** 2
    w = mu * y
    x = mu * (1.0 - 2.0 * w / (w + np.sqrt(w * (4.0 * lam + w))))
    # w == 0 (z drawn exactly 0) makes the ratio 0/0; the root is then mu.
    x = np.where(w == 0.0, mu, x)
    keep = gen.random(mu.shape) <= mu / (mu + x)
    return np.where(keep, x, mu * mu / x)


def sample_gig_half(chi, psi, rng: RngHandle):
    """Draw from GIG(1/2, chi, psi): density on u > 0 proportional to
    ``u**(-1/2) * exp(-(chi/u + psi*u) / 2)``.

    ``chi`` and ``psi`` broadcast elementwise.  ``chi == 0`` reduces to
    Gamma(1/2, rate psi/2) and is handled explicitly.
    """
    chi = np.asarray(chi, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if np.any(psi <= 0.0):
        raise ValueError("psi must be strictly positive")
    if np.any(chi < 0.0):
        raise ValueError("chi must be nonnegative")

    scalar = chi.ndim == 0 and psi.ndim == 0
    chi, psi = np.broadcast_arrays(chi, psi)
    out = np.empty(chi.shape, dtype=np.float64)

    degenerate = chi <= GIG_GAMMA_CUTOFF
    if np.any(degenerate):
        # Draw order must not depend on the chi values themselves beyond the
        # degenerate/regular split, so each branch consumes its own block.
        out[degenerate] = rng.generator.gamma(0.5, 2.0 / psi[degenerate])
    regular = ~degenerate
    if np.any(regular):
        mu_v = np.sqrt(psi[regular] / chi[regular])
        v = _inverse_gaussian(mu_v, psi[regular], rng)
        out[regular] = 1.0 / v
    return float(out) if scalar else out


def sample_mvn(mean, covariance, rng: RngHandle, size: int | None = None):
    """Draw from the d-variate normal N(mean, covariance).

    Returns a (d,) vector, or a (size, d) matrix when ``size`` is given.
    The covariance is factorized with Cholesky; if the factorization fails
    from accumulated asymmetry the matrix is symmetrized once and retried
    before raising :class:`NumericalError` with condition diagnostics.
    """
    mean = np.asarray(mean, dtype=np.float64)
    covariance = np.asarray(covariance, dtype=np.float64)
    if mean.ndim != 1 or covariance.shape != (mean.size, mean.size):
        raise ValueError(
            f"dimension mismatch: mean has size {mean.size}, "
            f"covariance has shape {covariance.shape}"
        )
    try:
        chol = np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        sym = 0.5 * (covariance + covariance.T)
        try:
            chol = np.linalg.cholesky(sym)
        except np.linalg.LinAlgError as exc:
            cond = float(np.linalg.cond(sym))
            raise NumericalError(
                "covariance is not positive definite "
                f"(condition number ~{cond:.3e})"
            ) from exc
    if size is None:
        return mean + chol @ rng.generator.standard_normal(mean.size)
    z = rng.generator.standard_normal((size, mean.size))
    return mean + z @ chol.T

"""Asymmetric Laplace distribution: check loss, density, CDF, and the
normal-exponential mixture constants used by the latent-variable sampler.

All functions are pure and shape-polymorphic: scalar arguments give scalar
results, ndarray arguments broadcast elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Agreement tolerance between the two closed forms of the check loss.
CHECK_LOSS_FORM_TOL = 1e-12
# Target accuracy for numerical integration of the density in tests.
PDF_INTEGRAL_TOL = 1e-8
# Finite-difference tolerance for validating the CDF against the density.
CDF_DERIVATIVE_TOL = 1e-6


def _validate_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {tau}")


@dataclass(frozen=True)
class QuantileSpec:
    """A quantile level together with its mixture-representation constants.

    ``theta`` is the location weight of the exponential latent variable and
    ``p2 = p**2`` its scale weight: an asymmetric Laplace variate with unit
    scale decomposes as ``theta*u + p*sqrt(u)*z`` with ``u ~ Exp(1)`` and
    ``z ~ N(0,1)``.
    """

    tau: float
    theta: float
    p: float
    p2: float

    def __post_init__(self):
        _validate_tau(self.tau)
        if self.p <= 0.0:
            raise ValueError(f"mixture scale constant must be positive, got {self.p}")


@dataclass(frozen=True)
class AldParams:
    """Location, scale and skewness of an asymmetric Laplace distribution.

    The location ``mu`` is simultaneously the mode and the ``tau``-th
    quantile of the distribution.
    """

    mu: float
    sigma: float
    tau: float

    def __post_init__(self):
        _validate_tau(self.tau)
        if self.sigma <= 0.0:
            raise ValueError(f"scale must be positive, got {self.sigma}")


def check_loss(u, tau: float):
    """Piecewise-linear quantile loss ``u * (tau - 1[u < 0])``.

    Nonnegative, and zero exactly at ``u == 0``.
    """
    _validate_tau(tau)
    u = np.asarray(u, dtype=np.float64)
    out = u * (tau - (u < 0.0))
    return out if out.ndim else float(out)


def check_loss_absolute_form(u, tau: float):
    """Equivalent closed form ``(|u| + (2*tau - 1)*u) / 2``.

    Kept alongside :func:`check_loss` so numerical agreement of the two
    algebraic routes can be cross-checked.
    """
    _validate_tau(tau)
    u = np.asarray(u, dtype=np.float64)
    out = (np.abs(u) + (2.0 * tau - 1.0) * u) / 2.0
    return out if out.ndim else float(out)


def mixture_constants(tau: float) -> QuantileSpec:
    """Constants of the normal-exponential mixture at quantile level ``tau``.

    ``theta = (1 - 2*tau) / (tau*(1 - tau))`` and ``p2 = 2 / (tau*(1 - tau))``.
    """
    _validate_tau(tau)
    denom = tau * (1.0 - tau)
    theta = (1.0 - 2.0 * tau) / denom
    p2 = 2.0 / denom
    return QuantileSpec(tau=tau, theta=theta, p=np.sqrt(p2), p2=p2)


def ald_pdf(eps, params: AldParams):
    """Density ``tau*(1-tau)/sigma * exp(-check_loss((eps-mu)/sigma, tau))``."""
    eps = np.asarray(eps, dtype=np.float64)
    z = (eps - params.mu) / params.sigma
    out = (
        params.tau
        * (1.0 - params.tau)
        / params.sigma
        * np.exp(-check_loss(z, params.tau))
    )
    return out if out.ndim else float(out)


def ald_cdf(eps, params: AldParams):
    """Distribution function, obtained by direct integration of the density.

    ``tau * exp((1-tau)*z)`` below the location and
    ``1 - (1-tau) * exp(-tau*z)`` above it, with ``z = (eps-mu)/sigma``.
    """
    eps = np.asarray(eps, dtype=np.float64)
    tau = params.tau
    z = (eps - params.mu) / params.sigma
    # clamp each branch to the region where it is used, so the unused
    # branch cannot overflow inside np.where
    lower = tau * np.exp((1.0 - tau) * np.minimum(z, 0.0))
    upper = 1.0 - (1.0 - tau) * np.exp(-tau * np.maximum(z, 0.0))
    out = np.where(z <= 0.0, lower, upper)
    return out if out.ndim else float(out)

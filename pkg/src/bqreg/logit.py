"""Bayesian logistic regression comparator, fit with adaptive random-walk
Metropolis.

The proposal is Gaussian; its scale and shape adapt during burn-in toward a
target acceptance rate of ~0.30 and are frozen afterward, so the kept chain
is a valid fixed-kernel Markov chain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError
from .model import Contrast, Dataset, GaussianPrior, McmcConfig
from .posterior import hpd_interval
from .samplers import RngHandle

TARGET_ACCEPTANCE = 0.30
ACCEPTANCE_HEALTHY = (0.1, 0.6)
ADAPT_INTERVAL = 50
ADAPT_GAIN = 0.66
# Coefficient magnitudes beyond this indicate a drifting, effectively
# unidentified fit (e.g. perfect separation under a near-flat prior).
COEF_DIVERGENCE_LIMIT = 1e3


@dataclass(frozen=True)
class LogitPosterior:
    """Stored coefficient draws of one logistic fit."""

    draws: np.ndarray
    acceptance_rate: float
    predictor_names: list[str]
    config: McmcConfig

    def __post_init__(self):
        draws = np.ascontiguousarray(self.draws, dtype=np.float64)
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        if not np.all(np.isfinite(draws)):
            raise ValueError("draws contain non-finite values")
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance rate must lie in [0, 1]")


@dataclass(frozen=True)
class CoefSummary:
    name: str
    mean: float
    lower: float
    upper: float
    significant: bool


def _log_posterior_fn(data: Dataset, prior: GaussianPrior):
    x = data.design
    sign = 1.0 - 2.0 * data.response  # +1 for y=0, -1 for y=1
    chol = cho_factor(prior.covariance, lower=True)
    precision = cho_solve(chol, np.eye(prior.mean.size))
    mean = prior.mean

    def log_posterior(beta: np.ndarray) -> float:
        eta = x @ beta
        loglik = -np.logaddexp(0.0, sign * eta).sum()
        dev = beta - mean
        return float(loglik - 0.5 * dev @ precision @ dev)

    return log_posterior


def fit_logit(data: Dataset, prior: GaussianPrior, config: McmcConfig) -> LogitPosterior:
    """Sample the logistic-regression posterior under a Gaussian prior.

    Deterministic given ``config.seed``.  The reported acceptance rate is
    measured over the post-burn-in sweeps; a rate outside
    ``ACCEPTANCE_HEALTHY`` raises a warning, not an error.
    """
    if prior.mean.size != data.n_coef:
        raise ValueError(
            f"prior dimension {prior.mean.size} does not match the "
            f"{data.n_coef}-column design"
        )
    d = data.n_coef
    rng = RngHandle(config.seed)
    gen = rng.generator
    log_posterior = _log_posterior_fn(data, prior)

    beta = prior.mean.copy()
    logp = log_posterior(beta)
    base_chol = np.eye(d) * (0.5 / np.sqrt(d))
    log_scale = 0.0

    history = np.empty((config.burn_in, d))
    window_accepts = 0

    def propose(current):
        z = gen.standard_normal(d)
        return current + np.exp(log_scale) * (base_chol @ z)

    for sweep in range(config.burn_in):
        cand = propose(beta)
        cand_logp = log_posterior(cand)
        if np.log(gen.random()) < cand_logp - logp:
            beta, logp = cand, cand_logp
            window_accepts += 1
        history[sweep] = beta
        if np.max(np.abs(beta)) > COEF_DIVERGENCE_LIMIT:
            raise NumericalError(
                "coefficient magnitudes diverged during burn-in; "
                "possible perfect separation"
            )
        if (sweep + 1) % ADAPT_INTERVAL == 0:
            rate = window_accepts / ADAPT_INTERVAL
            log_scale += ADAPT_GAIN * (rate - TARGET_ACCEPTANCE)
            window_accepts = 0
            if sweep + 1 >= max(4 * ADAPT_INTERVAL, 2 * d):
                emp = np.cov(history[: sweep + 1].T).reshape(d, d)
                emp = (2.38**2 / d) * emp + 1e-9 * np.eye(d)
                try:
                    base_chol = np.linalg.cholesky(emp)
                    log_scale = 0.0
                except np.linalg.LinAlgError:
                    pass  # keep the previous kernel

    kept = np.empty((config.kept, d))
    accepted = 0
    row = 0
    for sweep in range(1, config.draws + 1):
        cand = propose(beta)
        cand_logp = log_posterior(cand)
        if np.log(gen.random()) < cand_logp - logp:
            beta, logp = cand, cand_logp
            accepted += 1
        if np.max(np.abs(beta)) > COEF_DIVERGENCE_LIMIT:
            raise NumericalError(
                "coefficient magnitudes diverged; possible perfect separation"
            )
        if sweep % config.thin == 0:
            kept[row] = beta
            row += 1
    rate = accepted / config.draws
    if not ACCEPTANCE_HEALTHY[0] <= rate <= ACCEPTANCE_HEALTHY[1]:
        warnings.warn(
            f"post-adaptation acceptance rate {rate:.3f} outside "
            f"{ACCEPTANCE_HEALTHY}; inspect the chain",
            stacklevel=2,
        )
    return LogitPosterior(
        draws=kept,
        acceptance_rate=rate,
        predictor_names=list(data.predictor_names),
        config=config,
    )


def summarize_logit(
    posterior: LogitPosterior,
    hpd_prob: float,
    contrasts: tuple[Contrast, ...] = (),
) -> tuple[CoefSummary, ...]:
    """Posterior mean and HPD interval per coefficient, flagged significant
    when the interval excludes zero; declared contrasts are summed on the
    draw scale and summarized identically."""
    draws = posterior.draws
    if draws.shape[0] == 0:
        raise ValueError("posterior holds no draws")
    names = posterior.predictor_names

    def summarize_column(name: str, column: np.ndarray) -> CoefSummary:
        lower, upper = hpd_interval(column, hpd_prob)
        return CoefSummary(
            name=name,
            mean=float(column.mean()),
            lower=lower,
            upper=upper,
            significant=bool(lower > 0.0 or upper < 0.0),
        )

    rows = [summarize_column(name, draws[:, j]) for j, name in enumerate(names)]
    for contrast in contrasts:
        rows.append(summarize_column(contrast.name, contrast.draws_from(draws, names)))
    return tuple(rows)

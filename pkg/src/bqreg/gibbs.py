"""Three-block Gibbs sampler for binary quantile regression.

The binary outcome is modeled as the sign indicator of a latent linear
response whose error follows an asymmetric Laplace law with unit scale (the
binary likelihood identifies coefficients only up to scale, so no scale
update exists).  The asymmetric Laplace error is expanded into its
normal-exponential mixture, giving three standard full conditionals:

* latent responses: one-sided truncated normals,
* mixture variables: generalized inverse Gaussian with index 1/2,
* coefficients: a conjugate multivariate normal update.

A continuous-response mode reuses the last two blocks with the latent
response pinned to the observed values, which is ordinary Bayesian quantile
regression and serves as a test target for the shared machinery.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .ald import QuantileSpec, mixture_constants
from .errors import NumericalError
from .model import ContinuousDataset, Dataset, GaussianPrior, McmcConfig, PosteriorDraws
from .samplers import (
    RngHandle,
    TruncationSide,
    derive_subseed,
    sample_gig_half,
    sample_mvn,
    sample_truncated_normal,
)

# Latent responses beyond this magnitude signal a separated or unidentified
# configuration; the chain is aborted rather than silently drifting.
YSTAR_DIVERGENCE_LIMIT = 1e8


@dataclass
class ChainState:
    """Mutable augmented state of one chain: coefficients, latent responses
    and latent mixture variables (strictly positive)."""

    beta: np.ndarray
    ystar: np.ndarray
    u: np.ndarray


def _gig_psi(spec: QuantileSpec) -> float:
    # Exponent of the mixture-variable conditional: the unit-mean exponential
    # prior contributes exp(-u) = exp(-(1/2)*2u), the likelihood contributes
    # exp(-(theta^2/p^2) u / 2), hence psi = 2 + theta^2/p^2.
    return 2.0 + spec.theta**2 / spec.p2


def step_ystar(state: ChainState, data: Dataset, spec: QuantileSpec, rng: RngHandle) -> ChainState:
    """Redraw every latent response from its truncated-normal conditional.

    Responses equal to one draw from [0, inf), zero from (-inf, 0), each
    from N(x'beta + theta*u, p^2*u).
    """
    mean = data.design @ state.beta + spec.theta * state.u
    var = spec.p2 * state.u
    pos = data.response == 1
    state.ystar[pos] = sample_truncated_normal(
        mean[pos], var[pos], TruncationSide.NON_NEGATIVE, rng
    )
    neg = ~pos
    state.ystar[neg] = sample_truncated_normal(
        mean[neg], var[neg], TruncationSide.NEGATIVE, rng
    )
    return state


def step_u(state: ChainState, data, spec: QuantileSpec, rng: RngHandle) -> ChainState:
    """Redraw every mixture variable from GIG(1/2, residual^2/p^2, 2 + theta^2/p^2)."""
    resid = state.ystar - data.design @ state.beta
    chi = resid * resid / spec.p2
    state.u = sample_gig_half(chi, _gig_psi(spec), rng)
    return state


def _prior_terms(prior: GaussianPrior) -> tuple[np.ndarray, np.ndarray]:
    """Prior precision B0^-1 and its product with the prior mean."""
    chol = cho_factor(prior.covariance, lower=True)
    precision = cho_solve(chol, np.eye(prior.mean.size))
    return precision, precision @ prior.mean


def _beta_conditional(
    state: ChainState, data, spec: QuantileSpec, prior_precision, prior_rhs
) -> tuple[np.ndarray, np.ndarray]:
    x = data.design
    w = 1.0 / (spec.p2 * state.u)
    precision = (x * w[:, None]).T @ x + prior_precision
    rhs = x.T @ (w * (state.ystar - spec.theta * state.u)) + prior_rhs
    try:
        chol = cho_factor(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(precision))
        raise NumericalError(
            f"coefficient posterior precision is not positive definite "
            f"(condition number ~{cond:.3e})"
        ) from exc
    covariance = cho_solve(chol, np.eye(rhs.size))
    mean = covariance @ rhs
    return mean, covariance


def beta_full_conditional(
    state: ChainState, data, prior: GaussianPrior, spec: QuantileSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the conjugate normal coefficient update.

    Posterior precision is ``X' W X + B0^-1`` with weights
    ``w_i = 1/(p^2 u_i)``; the mean solves it against
    ``X' W (ystar - theta*u) + B0^-1 b0``.
    """
    prior_precision, prior_rhs = _prior_terms(prior)
    return _beta_conditional(state, data, spec, prior_precision, prior_rhs)


def step_beta(
    state: ChainState, data, prior: GaussianPrior, spec: QuantileSpec, rng: RngHandle
) -> ChainState:
    """Redraw the coefficient vector from its conjugate normal conditional."""
    mean, covariance = beta_full_conditional(state, data, prior, spec)
    state.beta = sample_mvn(mean, covariance, rng)
    return state


def initialize_chain(data: Dataset, prior: GaussianPrior, spec: QuantileSpec, rng: RngHandle) -> ChainState:
    """Deterministic start: beta at the prior mean, unit mixture variables,
    latent responses drawn once from their conditional."""
    state = ChainState(
        beta=prior.mean.copy(),
        ystar=np.zeros(data.n),
        u=np.ones(data.n),
    )
    step_ystar(state, data, spec, rng)
    return state


def _check_dimensions(data, prior: GaussianPrior) -> None:
    if prior.mean.size != data.n_coef:
        raise ValueError(
            f"prior dimension {prior.mean.size} does not match the "
            f"{data.n_coef}-column design"
        )


def run_chain(
    data: Dataset, prior: GaussianPrior, config: McmcConfig, tau: float
) -> PosteriorDraws:
    """Run one binary-response chain: burn-in plus stored sweeps.

    Each sweep updates latent responses, mixture variables, then
    coefficients, in that fixed order.  Every thin-th post-burn-in
    coefficient vector is stored.  Deterministic given ``config.seed``.
    """
    _check_dimensions(data, prior)
    spec = mixture_constants(tau)
    rng = RngHandle(config.seed)
    state = initialize_chain(data, prior, spec, rng)
    kept = np.empty((config.kept, data.n_coef))
    is_one = data.response == 1
    prior_precision, prior_rhs = _prior_terms(prior)

    row = 0
    total = config.burn_in + config.draws
    for sweep in range(1, total + 1):
        try:
            step_ystar(state, data, spec, rng)
            step_u(state, data, spec, rng)
            mean, covariance = _beta_conditional(
                state, data, spec, prior_precision, prior_rhs
            )
            state.beta = sample_mvn(mean, covariance, rng)
        except NumericalError as exc:
            raise NumericalError(f"sweep {sweep}: {exc}") from exc
        if np.max(np.abs(state.ystar)) > YSTAR_DIVERGENCE_LIMIT:
            raise NumericalError(
                f"sweep {sweep}: latent response magnitude exceeded "
                f"{YSTAR_DIVERGENCE_LIMIT:g}; the configuration may be "
                "separated or unidentified"
            )
        assert np.all(state.u > 0.0), "mixture variables must stay positive"
        assert np.array_equal(state.ystar >= 0.0, is_one), "latent sign inconsistency"
        post = sweep - config.burn_in
        if post >= 1 and post % config.thin == 0:
            kept[row] = state.beta
            row += 1
    return PosteriorDraws(
        draws=kept, tau=tau, predictor_names=list(data.predictor_names), config=config
    )


def run_chain_continuous(
    data: ContinuousDataset, prior: GaussianPrior, config: McmcConfig, tau: float
) -> PosteriorDraws:
    """Continuous-response quantile regression: the latent response is the
    observed response, so only the mixture and coefficient blocks update."""
    _check_dimensions(data, prior)
    spec = mixture_constants(tau)
    rng = RngHandle(config.seed)
    state = ChainState(
        beta=prior.mean.copy(),
        ystar=data.response.copy(),
        u=np.ones(data.n),
    )
    kept = np.empty((config.kept, data.n_coef))
    prior_precision, prior_rhs = _prior_terms(prior)
    row = 0
    total = config.burn_in + config.draws
    for sweep in range(1, total + 1):
        try:
            step_u(state, data, spec, rng)
            mean, covariance = _beta_conditional(
                state, data, spec, prior_precision, prior_rhs
            )
            state.beta = sample_mvn(mean, covariance, rng)
        except NumericalError as exc:
            raise NumericalError(f"sweep {sweep}: {exc}") from exc
        assert np.all(state.u > 0.0), "mixture variables must stay positive"
        post = sweep - config.burn_in
        if post >= 1 and post % config.thin == 0:
            kept[row] = state.beta
            row += 1
    return PosteriorDraws(
        draws=kept, tau=tau, predictor_names=list(data.predictor_names), config=config
    )


class GridRunError(NumericalError):
    """One or more grid chains failed; completed results are preserved."""

    def __init__(self, failures: dict[float, str], results: dict[float, PosteriorDraws]):
        self.failures = failures
        self.results = results
        lines = "; ".join(f"tau={tau:g}: {msg}" for tau, msg in sorted(failures.items()))
        super().__init__(f"{len(failures)} grid chain(s) failed: {lines}")


def grid_configs(config: McmcConfig, grid) -> list[tuple[float, McmcConfig]]:
    """Per-quantile configs with deterministic sub-seeds.

    Sub-seeds are keyed by the rank of each level in the sorted grid, so
    results do not depend on the order the grid was written in.
    """
    taus = [float(t) for t in grid]
    if not taus:
        raise ValueError("quantile grid must be nonempty")
    for t in taus:
        if not 0.0 < t < 1.0:
            raise ValueError(f"quantile levels must lie in (0, 1), got {t}")
    ordered = sorted(taus)
    if any(a == b for a, b in zip(ordered, ordered[1:])):
        raise ValueError("quantile levels must be distinct")
    return [
        (tau, dataclasses.replace(config, seed=derive_subseed(config.seed, rank)))
        for rank, tau in enumerate(ordered)
    ]


def _grid_worker(args) -> tuple[float, PosteriorDraws]:
    data, prior, cfg, tau = args
    return tau, run_chain(data, prior, cfg, tau)


def run_grid(
    data: Dataset,
    prior: GaussianPrior,
    config: McmcConfig,
    grid,
    max_workers: int | None = None,
    progress=None,
) -> dict[float, PosteriorDraws]:
    """Run one independent chain per quantile level.

    Chains run in a process pool when ``max_workers`` exceeds one.  A
    failing level does not abort the others: completed results ride along
    on the raised :class:`GridRunError`.  ``progress`` is an optional
    callback invoked with each finished tau.
    """
    _check_dimensions(data, prior)
    jobs = [(data, prior, cfg, tau) for tau, cfg in grid_configs(config, grid)]
    results: dict[float, PosteriorDraws] = {}
    failures: dict[float, str] = {}

    def record(tau, outcome, error=None):
        if error is None:
            results[tau] = outcome
        else:
            failures[tau] = str(error)
        if progress is not None:
            progress(tau)

    if max_workers is not None and max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures = {pool.submit(_grid_worker, job): job[3] for job in jobs}
            for future, tau in futures.items():
                try:
                    record(tau, future.result()[1])
                except (NumericalError, ValueError) as exc:
                    record(tau, None, exc)
    else:
        for job in jobs:
            try:
                record(job[3], _grid_worker(job)[1])
            except (NumericalError, ValueError) as exc:
                record(job[3], None, exc)

    if failures:
        raise GridRunError(failures, results)
    return results

"""Chain summarization: scale-free slope directions, highest-density
intervals, autocorrelation diagnostics, and the per-quantile forest table.

The binary model identifies coefficients only up to a positive scale, so
cross-quantile comparison happens on the slope vector divided by its
Euclidean norm.  Normalization is applied to every stored draw and the
summaries (means, HPD intervals) are computed on the normalized draws, not
the other way around.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Contrast, PosteriorDraws
from .serialize import csv_text, format_float

UNIT_NORM_TOL = 1e-12
MIN_HPD_DRAWS = 10
MIN_ESS_DRAWS = 100


def normalize_slopes(draw: np.ndarray) -> np.ndarray:
    """Drop the intercept coordinate and scale the rest to unit Euclidean
    norm.  Errors if the slope block is identically zero (no direction)."""
    draw = np.asarray(draw, dtype=np.float64)
    if draw.ndim != 1 or draw.size < 2:
        raise ValueError("draw must be a vector with at least one slope")
    slopes = draw[1:]
    norm = float(np.linalg.norm(slopes))
    if norm == 0.0:
        raise ValueError("slope vector is zero; direction undefined")
    return slopes / norm


def hpd_interval(draws: np.ndarray, prob: float) -> tuple[float, float]:
    """Shortest contiguous interval over the sorted draws containing at
    least ceil(prob * M) of them.

    Ties between equally short windows resolve to the smallest lower
    endpoint, so the output is deterministic.
    """
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim != 1:
        raise ValueError("draws must be a vector")
    m = draws.size
    if m < MIN_HPD_DRAWS:
        raise ValueError(f"need at least {MIN_HPD_DRAWS} draws, got {m}")
    if not 0.0 < prob < 1.0:
        raise ValueError(f"interval probability must lie in (0, 1), got {prob}")
    ordered = np.sort(draws)
    # Guard ceil against representation noise in prob * m (e.g. 0.95 * 100).
    gap = min(math.ceil(prob * m - 1e-9 * m), m - 1)
    widths = ordered[gap:] - ordered[: m - gap]
    start = int(np.argmin(widths))
    return float(ordered[start]), float(ordered[start + gap])


def autocorrelation(draws: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (lag 0 is exactly 1)."""
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim != 1:
        raise ValueError("draws must be a vector")
    m = draws.size
    if not 0 <= max_lag < m:
        raise ValueError(f"max_lag must lie in [0, {m - 1}], got {max_lag}")
    centered = draws - draws.mean()
    if np.all(centered == 0.0):
        raise ValueError("constant series has no autocorrelation")
    nfft = 1 << (2 * m - 1).bit_length()
    spectrum = np.fft.rfft(centered, nfft)
    acov = np.fft.irfft(spectrum * np.conj(spectrum))[: max_lag + 1] / m
    acf = acov / acov[0]
    acf[0] = 1.0
    return acf


def effective_sample_size(draws: np.ndarray) -> float:
    """M / (1 + 2 * sum of leading nonnegative autocorrelations).

    The sum truncates at the first negative autocorrelation, which keeps
    the estimate in (0, M].
    """
    draws = np.asarray(draws, dtype=np.float64)
    m = draws.size
    if m < MIN_ESS_DRAWS:
        raise ValueError(f"need at least {MIN_ESS_DRAWS} draws, got {m}")
    acf = autocorrelation(draws, m - 1)
    tail = acf[1:]
    negative = np.flatnonzero(tail < 0.0)
    cut = negative[0] if negative.size else tail.size
    return float(m / (1.0 + 2.0 * tail[:cut].sum()))


@dataclass(frozen=True)
class TraceSeries:
    """A stored coefficient trajectory with its global sweep indices."""

    predictor: str
    sweeps: np.ndarray
    values: np.ndarray

    def to_csv(self) -> str:
        rows = (
            (str(int(s)), format_float(v))
            for s, v in zip(self.sweeps, self.values)
        )
        return csv_text(["sweep", self.predictor], rows)

    def to_json(self) -> str:
        return json.dumps(
            {
                "predictor": self.predictor,
                "sweeps": [int(s) for s in self.sweeps],
                "values": [float(v) for v in self.values],
            },
            indent=2,
        )


def trace_from_csv(text: str) -> TraceSeries:
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    sweeps, values = [], []
    for line in lines[1:]:
        s, v = line.split(",")
        sweeps.append(int(s))
        values.append(float(v))
    return TraceSeries(
        predictor=header[1], sweeps=np.asarray(sweeps), values=np.asarray(values)
    )


def trace_from_json(text: str) -> TraceSeries:
    raw = json.loads(text)
    return TraceSeries(
        predictor=raw["predictor"],
        sweeps=np.asarray(raw["sweeps"], dtype=np.int64),
        values=np.asarray(raw["values"], dtype=np.float64),
    )


def export_trace(draws: PosteriorDraws, predictor: str) -> TraceSeries:
    """Stored draw sequence of one coefficient, with the sweep index of each
    stored row (burn-in sweeps counted, thinning respected)."""
    values = draws.column(predictor)
    cfg = draws.config
    sweeps = cfg.burn_in + cfg.thin * np.arange(1, values.size + 1)
    return TraceSeries(predictor=predictor, sweeps=sweeps, values=values.copy())


@dataclass(frozen=True)
class ForestRow:
    predictor: str
    tau: float
    mean: float
    lower: float
    upper: float
    significant: bool


@dataclass(frozen=True)
class ForestTable:
    """Normalized point and interval estimates per predictor per quantile."""

    rows: tuple[ForestRow, ...]
    metadata: dict = field(default_factory=dict)

    CSV_HEADER = ["predictor", "tau", "mean", "hpd_lower", "hpd_upper", "significant"]

    def to_csv(self) -> str:
        rows = (
            (
                r.predictor,
                format_float(r.tau),
                format_float(r.mean),
                format_float(r.lower),
                format_float(r.upper),
                "true" if r.significant else "false",
            )
            for r in self.rows
        )
        return csv_text(self.CSV_HEADER, rows)

    def to_json(self) -> str:
        payload = {
            "metadata": self.metadata,
            "rows": [
                {
                    "predictor": r.predictor,
                    "tau": r.tau,
                    "mean": r.mean,
                    "hpd_lower": r.lower,
                    "hpd_upper": r.upper,
                    "significant": r.significant,
                }
                for r in self.rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _normalized_blocks(
    draws: PosteriorDraws, contrasts: tuple[Contrast, ...]
) -> tuple[list[str], np.ndarray]:
    """Per-draw normalized slopes with contrast pseudo-coefficients appended.

    Contrast draws are summed on the raw coefficient scale and divided by
    the same per-draw slope norm as the true slopes, so they live on the
    normalized scale without perturbing it.
    """
    slopes = draws.draws[:, 1:]
    norms = np.linalg.norm(slopes, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("a stored draw has a zero slope vector")
    columns = [slopes / norms[:, None]]
    names = list(draws.predictor_names[1:])
    for contrast in contrasts:
        raw = contrast.draws_from(draws.draws, draws.predictor_names)
        columns.append((raw / norms)[:, None])
        names.append(contrast.name)
    return names, np.hstack(columns)


def build_forest_table(
    grid_results: dict[float, PosteriorDraws],
    hpd_prob: float,
    contrasts: tuple[Contrast, ...] = (),
    metadata: dict | None = None,
) -> ForestTable:
    """Summarize normalized draws over the whole quantile grid.

    One row per non-intercept predictor and declared contrast at each
    quantile level, ordered by level then predictor.  A row is flagged
    significant when its HPD interval excludes zero.
    """
    if not grid_results:
        raise ValueError("grid results must be nonempty")
    taus = sorted(grid_results)
    names0 = grid_results[taus[0]].predictor_names
    for tau in taus:
        if grid_results[tau].predictor_names != names0:
            raise ValueError(f"predictor names differ at tau={tau:g}")
    rows = []
    for tau in taus:
        names, normalized = _normalized_blocks(grid_results[tau], tuple(contrasts))
        for j, name in enumerate(names):
            lower, upper = hpd_interval(normalized[:, j], hpd_prob)
            rows.append(
                ForestRow(
                    predictor=name,
                    tau=tau,
                    mean=float(normalized[:, j].mean()),
                    lower=lower,
                    upper=upper,
                    significant=bool(lower > 0.0 or upper < 0.0),
                )
            )
    meta = dict(metadata or {})
    meta.setdefault("hpd_prob", hpd_prob)
    meta.setdefault("grid", [float(t) for t in taus])
    meta.setdefault(
        "chains",
        {
            f"{tau:.6g}": {
                "burn_in": grid_results[tau].config.burn_in,
                "draws": grid_results[tau].config.draws,
                "thin": grid_results[tau].config.thin,
                "seed": grid_results[tau].config.seed,
            }
            for tau in taus
        },
    )
    return ForestTable(rows=tuple(rows), metadata=meta)

"""Dataset construction: schema-driven CSV ingestion and a synthetic-cohort
generator whose known truth anchors the recovery tests.

CSV dialect: comma-separated, UTF-8, header row required, fields quoted per
the csv module's defaults.  Empty fields are missing values and are a hard
error with the offending row numbers; nothing is imputed or dropped.
Categoricals are reference-cell dummy coded (one column per non-reference
level, named "<column>: <level>").  Declared interactions multiply
already-encoded columns and are named "<left> x <right>".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .ald import ald_cdf, AldParams, mixture_constants
from .errors import DataError
from .model import Dataset, PosteriorDraws
from .posterior import hpd_interval, normalize_slopes
from .samplers import RngHandle
from .serialize import csv_text, format_float, read_csv_columns

ROLES = ("response", "numeric", "categorical", "skip")


@dataclass(frozen=True)
class AffineMap:
    """Column rescaling applied at load: encoded = offset + scale * raw."""

    scale: float
    offset: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.offset + self.scale * x


@dataclass(frozen=True)
class ColumnDecl:
    name: str
    role: str
    levels: tuple[str, ...] = ()
    reference: str = ""
    rescale: AffineMap | None = None

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.role not in ROLES:
            raise ValueError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.role == "categorical":
            if len(self.levels) < 2:
                raise ValueError(f"column {self.name!r}: need at least two levels")
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"column {self.name!r}: duplicate levels")
            if self.reference not in self.levels:
                raise ValueError(
                    f"column {self.name!r}: reference {self.reference!r} "
                    "not among the declared levels"
                )
        elif self.levels or self.reference:
            raise ValueError(f"column {self.name!r}: levels are for categoricals only")
        if self.rescale is not None and self.role != "numeric":
            raise ValueError(f"column {self.name!r}: rescaling is for numerics only")


@dataclass(frozen=True)
class VariableSchema:
    """Declared roles, encodings and interactions of the CSV columns."""

    columns: tuple[ColumnDecl, ...]
    interactions: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column declarations")
        responses = [c for c in self.columns if c.role == "response"]
        if len(responses) != 1:
            raise ValueError(f"exactly one response column required, got {len(responses)}")
        usable = {c.name for c in self.columns if c.role in ("numeric", "categorical")}
        for a, b in self.interactions:
            for col in (a, b):
                if col not in usable:
                    raise ValueError(
                        f"interaction references {col!r}, which is not a "
                        "numeric or categorical column"
                    )

    @property
    def response(self) -> str:
        return next(c.name for c in self.columns if c.role == "response")

    @classmethod
    def from_json(cls, text: str) -> "VariableSchema":
        raw = json.loads(text)
        columns = []
        for item in raw.get("columns", []):
            rescale = item.get("rescale")
            columns.append(
                ColumnDecl(
                    name=item["name"],
                    role=item["role"],
                    levels=tuple(item.get("levels", ())),
                    reference=item.get("reference", ""),
                    rescale=AffineMap(**rescale) if rescale else None,
                )
            )
        interactions = tuple(tuple(pair) for pair in raw.get("interactions", ()))
        return cls(columns=tuple(columns), interactions=interactions)

    def to_json(self) -> str:
        columns = []
        for c in self.columns:
            item: dict = {"name": c.name, "role": c.role}
            if c.role == "categorical":
                item["levels"] = list(c.levels)
                item["reference"] = c.reference
            if c.rescale is not None:
                item["rescale"] = {"scale": c.rescale.scale, "offset": c.rescale.offset}
            columns.append(item)
        return json.dumps(
            {"columns": columns, "interactions": [list(p) for p in self.interactions]},
            indent=2,
        )


def _parse_number(value: str, column: str, row: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataError(
            f"column {column!r}, data row {row}: cannot parse {value!r} as a number"
        ) from None


def _encode_column(decl: ColumnDecl, values: list[str]) -> tuple[list[str], np.ndarray]:
    """Encoded column names and matrix block for one declared column."""
    if decl.role == "numeric":
        block = np.array(
            [_parse_number(v, decl.name, i + 1) for i, v in enumerate(values)]
        )[:, None]
        if decl.rescale is not None:
            block = decl.rescale.apply(block)
        return [decl.name], block
    # categorical: one dummy per non-reference level, in declared order
    names, columns = [], []
    level_set = set(decl.levels)
    for i, v in enumerate(values):
        if v not in level_set:
            raise DataError(
                f"column {decl.name!r}, data row {i + 1}: unseen level {v!r}"
            )
    arr = np.array(values, dtype=object)
    for level in decl.levels:
        if level == decl.reference:
            continue
        names.append(f"{decl.name}: {level}")
        columns.append((arr == level).astype(np.float64))
    return names, np.column_stack(columns)


def load_dataset(csv_path, schema: VariableSchema) -> Dataset:
    """Read a CSV into an encoded design matrix plus binary response.

    The intercept column is prepended, dummy coding and declared rescalings
    and interactions are applied, and the result is checked for full column
    rank.  Missing values anywhere in a schema-relevant column abort the
    load with the offending row numbers (1-based, header excluded).
    """
    header, raw_rows = read_csv_columns(csv_path)
    index = {name: j for j, name in enumerate(header)}
    relevant = [c for c in schema.columns if c.role != "skip"]
    for decl in relevant:
        if decl.name not in index:
            raise DataError(f"column {decl.name!r} missing from {csv_path}")
    if not raw_rows:
        raise DataError(f"{csv_path}: no data rows")

    short = [i + 1 for i, row in enumerate(raw_rows) if len(row) != len(header)]
    if short:
        raise DataError(f"rows with wrong field count: {short}")
    missing: dict[str, list[int]] = {}
    for decl in relevant:
        j = index[decl.name]
        bad = [i + 1 for i, row in enumerate(raw_rows) if row[j] == ""]
        if bad:
            missing[decl.name] = bad
    if missing:
        detail = "; ".join(f"{col}: rows {rows}" for col, rows in missing.items())
        raise DataError(f"missing values ({detail}); no imputation is performed")

    n = len(raw_rows)
    response_decl = next(c for c in relevant if c.role == "response")
    j = index[response_decl.name]
    response = np.empty(n, dtype=np.int64)
    for i, row in enumerate(raw_rows):
        value = _parse_number(row[j], response_decl.name, i + 1)
        if value not in (0.0, 1.0):
            raise DataError(
                f"response {response_decl.name!r}, data row {i + 1}: "
                f"expected 0 or 1, got {row[j]!r}"
            )
        response[i] = int(value)

    names: list[str] = ["Intercept"]
    blocks: list[np.ndarray] = [np.ones((n, 1))]
    encoded: dict[str, tuple[list[str], np.ndarray]] = {}
    for decl in relevant:
        if decl.role == "response":
            continue
        col_names, block = _encode_column(decl, [row[index[decl.name]] for row in raw_rows])
        encoded[decl.name] = (col_names, block)
        names.extend(col_names)
        blocks.append(block)
    for a, b in schema.interactions:
        names_a, block_a = encoded[a]
        names_b, block_b = encoded[b]
        for ja, name_a in enumerate(names_a):
            for jb, name_b in enumerate(names_b):
                names.append(f"{name_a} x {name_b}")
                blocks.append((block_a[:, ja] * block_b[:, jb])[:, None])

    design = np.hstack(blocks)
    return Dataset(design=design, response=response, predictor_names=names)


# ---------------------------------------------------------------------------
# synthetic cohorts


@dataclass(frozen=True)
class BernoulliCovariate:
    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"Bernoulli probability must lie in (0, 1), got {self.q}")

    def names(self, base: str) -> list[str]:
        return [base]

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return (gen.random(n) < self.q).astype(np.float64)[:, None]


@dataclass(frozen=True)
class UniformCovariate:
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("uniform bounds must satisfy low < high")

    def names(self, base: str) -> list[str]:
        return [base]

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return gen.uniform(self.low, self.high, n)[:, None]


@dataclass(frozen=True)
class CategoricalCovariate:
    """Levels drawn with the given probabilities; the first level is the
    reference and produces no column."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) < 2:
            raise ValueError("categorical generator needs at least two levels")
        if any(p <= 0.0 for p in self.probs) or not math.isclose(
            sum(self.probs), 1.0, abs_tol=1e-9
        ):
            raise ValueError("categorical probabilities must be positive and sum to 1")

    def names(self, base: str) -> list[str]:
        return [f"{base}: lvl{k}" for k in range(1, len(self.probs))]

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        levels = gen.choice(len(self.probs), size=n, p=np.asarray(self.probs))
        return np.column_stack(
            [(levels == k).astype(np.float64) for k in range(1, len(self.probs))]
        )


ERROR_FAMILIES = ("ald", "logistic", "gaussian")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic cohort with known coefficients.

    ALD errors are centered so their tau-quantile is zero (the identifying
    constraint of the latent model); logistic and Gaussian errors are the
    standard median-zero forms.
    """

    n: int
    true_beta: tuple[float, ...]
    covariates: tuple
    error_family: str = "ald"
    tau: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.error_family not in ERROR_FAMILIES:
            raise ValueError(f"unknown error family {self.error_family!r}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {self.tau}")
        width = 1 + sum(len(c.names("x")) for c in self.covariates)
        if len(self.true_beta) != width:
            raise ValueError(
                f"true_beta must have {width} entries (intercept plus encoded "
                f"columns), got {len(self.true_beta)}"
            )
        if self.n < width:
            raise ValueError(f"need at least {width} rows, got {self.n}")


@dataclass(frozen=True)
class SyntheticTruth:
    """The latent parameters behind a generated cohort."""

    true_beta: tuple[float, ...]
    predictor_names: tuple[str, ...]
    error_family: str
    tau: float
    seed: int
    n: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "true_beta": list(self.true_beta),
                "predictor_names": list(self.predictor_names),
                "error_family": self.error_family,
                "tau": self.tau,
                "seed": self.seed,
                "n": self.n,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "SyntheticTruth":
        raw = json.loads(text)
        return cls(
            true_beta=tuple(raw["true_beta"]),
            predictor_names=tuple(raw["predictor_names"]),
            error_family=raw["error_family"],
            tau=raw["tau"],
            seed=raw["seed"],
            n=raw["n"],
        )


def _sample_errors(spec: SyntheticSpec, gen: np.random.Generator) -> np.ndarray:
    if spec.error_family == "ald":
        mix = mixture_constants(spec.tau)
        u = gen.exponential(1.0, spec.n)
        z = gen.standard_normal(spec.n)
        return mix.theta * u + mix.p * np.sqrt(u) * z
    if spec.error_family == "logistic":
        return gen.logistic(0.0, 1.0, spec.n)
    return gen.standard_normal(spec.n)


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, SyntheticTruth]:
    """Draw covariates, form the latent linear response with the declared
    error family, and dichotomize at zero.  Deterministic given the seed."""
    rng = RngHandle(spec.seed)
    gen = rng.generator
    names = ["Intercept"]
    blocks = [np.ones((spec.n, 1))]
    for k, cov in enumerate(spec.covariates):
        names.extend(cov.names(f"x{k + 1}"))
        blocks.append(cov.sample(spec.n, gen))
    design = np.hstack(blocks)
    beta = np.asarray(spec.true_beta, dtype=np.float64)
    ystar = design @ beta + _sample_errors(spec, gen)
    response = (ystar >= 0.0).astype(np.int64)
    if response.min() == response.max():
        raise DataError(
            f"degenerate response (all {int(response[0])}); adjust true_beta, "
            "the covariate design, or the error family"
        )
    dataset = Dataset(design=design, response=response, predictor_names=names)
    truth = SyntheticTruth(
        true_beta=tuple(float(b) for b in beta),
        predictor_names=tuple(names),
        error_family=spec.error_family,
        tau=spec.tau,
        seed=spec.seed,
        n=spec.n,
    )
    return dataset, truth


def binary_success_probability(x_row: np.ndarray, true_beta: np.ndarray, tau: float) -> float:
    """Population P(y = 1 | x) for ALD(tau) errors: 1 - F(-x'beta)."""
    xb = float(np.dot(x_row, true_beta))
    return 1.0 - ald_cdf(-xb, AldParams(mu=0.0, sigma=1.0, tau=tau))


def dataset_to_csv(dataset: Dataset) -> str:
    """Response plus encoded covariate columns, floats at 17 digits."""
    header = ["response"] + list(dataset.predictor_names[1:])
    rows = (
        [str(int(y))] + [format_float(v) for v in row[1:]]
        for y, row in zip(dataset.response, dataset.design)
    )
    return csv_text(header, rows)


def numeric_schema_for(dataset: Dataset) -> VariableSchema:
    """Schema that reloads a CSV written by :func:`dataset_to_csv`."""
    columns = [ColumnDecl(name="response", role="response")]
    columns.extend(
        ColumnDecl(name=name, role="numeric") for name in dataset.predictor_names[1:]
    )
    return VariableSchema(columns=tuple(columns))


@dataclass(frozen=True)
class RecoveryReport:
    """How well a fit recovered the generating direction."""

    angular_distance: float
    sign_agreement: tuple[bool, ...]
    hpd_covers: tuple[bool, ...]
    slope_names: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "angular_distance": self.angular_distance,
            "sign_agreement": list(self.sign_agreement),
            "hpd_covers": list(self.hpd_covers),
            "slope_names": list(self.slope_names),
        }


def score_recovery(
    fit: PosteriorDraws, truth: SyntheticTruth, hpd_prob: float = 0.95
) -> RecoveryReport:
    """Angular distance between the normalized posterior-mean direction and
    the normalized true slopes, per-coefficient sign agreement, and whether
    each normalized true coefficient falls inside its HPD interval."""
    true_beta = np.asarray(truth.true_beta, dtype=np.float64)
    if true_beta.size != len(fit.predictor_names):
        raise ValueError(
            f"truth has {true_beta.size} coefficients, fit has "
            f"{len(fit.predictor_names)}"
        )
    true_dir = normalize_slopes(true_beta)
    fit_dir = normalize_slopes(fit.draws.mean(axis=0))
    cosine = float(np.clip(np.dot(fit_dir, true_dir), -1.0, 1.0))

    slopes = fit.draws[:, 1:]
    norms = np.linalg.norm(slopes, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("a stored draw has a zero slope vector")
    normalized = slopes / norms[:, None]
    covers = []
    for j in range(true_dir.size):
        lower, upper = hpd_interval(normalized[:, j], hpd_prob)
        covers.append(bool(lower <= true_dir[j] <= upper))
    return RecoveryReport(
        angular_distance=float(np.arccos(cosine)),
        sign_agreement=tuple(bool(s) for s in (np.sign(fit_dir) == np.sign(true_dir))),
        hpd_covers=tuple(covers),
        slope_names=tuple(fit.predictor_names[1:]),
    )

"""Command-line front door.

Subcommands: ``simulate`` (synthetic cohort to disk), ``fit-bqr`` (quantile
grid of binary QR chains), ``fit-logit`` (logistic baseline), ``summarize``
(recompute tables from stored draws).  Progress goes to stderr; data goes to
files; on failure a machine-readable JSON error report goes to stdout.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical/sampler
error.

Run-directory layout (fit-bqr): one ``draws_tau_<t>.csv`` per grid point
(header row of predictor names, one stored draw per line, floats at 17
significant digits), ``forest.csv``/``forest.json``, ``diagnostics.csv``
(ESS and lag-1 autocorrelation per coefficient per quantile), and
``manifest.json`` written last.  The manifest echoes the full configuration
and per-quantile sub-seeds, so ``summarize`` can rebuild every table
byte-identically; its wall-time field is the one value that varies between
reruns.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import (
    BernoulliCovariate,
    CategoricalCovariate,
    SyntheticSpec,
    UniformCovariate,
    VariableSchema,
    dataset_to_csv,
    generate_synthetic,
    load_dataset,
    numeric_schema_for,
)
from .errors import DataError, NumericalError
from .gibbs import GridRunError, grid_configs, run_grid
from .logit import fit_logit, summarize_logit
from .model import Contrast, Dataset, GaussianPrior, McmcConfig, PosteriorDraws
from .posterior import autocorrelation, build_forest_table, effective_sample_size
from .serialize import csv_text, format_float, write_text

DEFAULT_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Echoable configuration of one CLI invocation."""

    subcommand: str
    input: str | None = None
    schema: str | None = None
    output_dir: str | None = None
    run_dir: str | None = None
    grid: tuple[float, ...] = DEFAULT_GRID
    burn_in: int = 1000
    draws: int = 10000
    thin: int = 1
    seed: int = 0
    hpd_prob: float = 0.95
    prior_mean: tuple[float, ...] | None = None
    prior_variance: tuple[float, ...] | None = None
    contrasts: tuple[Contrast, ...] = ()
    jobs: int = 0  # 0 means available parallelism
    n: int = 0
    true_beta: tuple[float, ...] = ()
    covariates: str = ""
    error_family: str = "ald"
    tau: float = 0.5
    hpd_prob_set: bool = False

    def mcmc(self) -> McmcConfig:
        return McmcConfig(
            burn_in=self.burn_in, draws=self.draws, thin=self.thin, seed=self.seed
        )

    def to_manifest(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "input": self.input,
            "schema": self.schema,
            "grid": list(self.grid),
            "burn_in": self.burn_in,
            "draws": self.draws,
            "thin": self.thin,
            "seed": self.seed,
            "hpd_prob": self.hpd_prob,
            "prior_mean": list(self.prior_mean) if self.prior_mean else None,
            "prior_variance": list(self.prior_variance) if self.prior_variance else None,
            "contrasts": [{"name": c.name, "terms": list(c.terms)} for c in self.contrasts],
            "jobs": self.jobs,
            "n": self.n,
            "true_beta": list(self.true_beta),
            "covariates": self.covariates,
            "error_family": self.error_family,
            "tau": self.tau,
        }


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as comma-separated numbers") from None


def _parse_contrast(text: str) -> Contrast:
    if "=" not in text:
        raise UsageError(
            f"contrast must look like NAME=term+term, got {text!r}"
        )
    name, _, terms = text.partition("=")
    parts = tuple(t.strip() for t in terms.split("+") if t.strip())
    if not parts:
        raise UsageError(f"contrast {name!r} declares no terms")
    return Contrast(name=name.strip(), terms=parts)


_COV_ENTRY = r"(?:bernoulli|uniform|categorical)\([^()]*\)"
_COV_SPEC = re.compile(rf"^{_COV_ENTRY}(?:,{_COV_ENTRY})*$")
_COV_PATTERN = re.compile(r"(bernoulli|uniform|categorical)\(([^()]*)\)")


def _parse_covariates(text: str):
    """Parse 'bernoulli(0.5),uniform(-1,1),categorical(0.5,0.3,0.2)'."""
    compact = text.replace(" ", "")
    if not _COV_SPEC.match(compact):
        raise UsageError(f"cannot parse covariate spec {text!r}")
    specs = []
    for kind, args in _COV_PATTERN.findall(compact):
        try:
            values = [float(v) for v in args.split(",") if v != ""]
        except ValueError:
            raise UsageError(f"bad covariate arguments in {kind}({args})") from None
        try:
            if kind == "bernoulli":
                if len(values) != 1:
                    raise ValueError("bernoulli(...) takes one probability")
                specs.append(BernoulliCovariate(values[0]))
            elif kind == "uniform":
                if len(values) != 2:
                    raise ValueError("uniform(...) takes low,high")
                specs.append(UniformCovariate(values[0], values[1]))
            else:
                specs.append(CategoricalCovariate(tuple(values)))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return tuple(specs)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bqreg",
        description="Bayesian binary quantile regression over a quantile grid",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file whose keys fill in unset flags")
        p.add_argument("--output-dir", help="directory for run artifacts")
        p.add_argument("--seed", type=int, help="master seed (default 0)")

    def add_mcmc(p):
        p.add_argument("--burn-in", type=int, help="burn-in sweeps (default 1000)")
        p.add_argument("--draws", type=int, help="post-burn-in sweeps (default 10000)")
        p.add_argument("--thin", type=int, help="store every thin-th draw (default 1)")
        p.add_argument("--hpd-prob", type=float, help="HPD mass (default 0.95)")
        p.add_argument("--input", help="input dataset CSV")
        p.add_argument("--schema", help="variable schema JSON")
        p.add_argument(
            "--prior-mean",
            help="comma-separated prior mean (single value broadcasts)",
        )
        p.add_argument(
            "--prior-variance",
            help="comma-separated prior variance diagonal (single value broadcasts)",
        )
        p.add_argument(
            "--contrast",
            action="append",
            default=None,
            metavar="NAME=term+term",
            help="coefficient-sum contrast; repeatable",
        )

    p = sub.add_parser("fit-bqr", help="fit binary QR chains over a quantile grid")
    add_common(p)
    add_mcmc(p)
    p.add_argument("--grid", help="comma-separated quantile levels")
    p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")

    p = sub.add_parser("fit-logit", help="fit the Bayesian logistic baseline")
    add_common(p)
    add_mcmc(p)

    p = sub.add_parser("simulate", help="generate a synthetic cohort")
    add_common(p)
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--true-beta", help="comma-separated coefficients (intercept first)")
    p.add_argument(
        "--covariates",
        help="e.g. 'bernoulli(0.5),uniform(-1,1),categorical(0.5,0.3,0.2)'",
    )
    p.add_argument("--error-family", choices=["ald", "logistic", "gaussian"])
    p.add_argument("--tau", type=float, help="quantile level of the ALD error family")

    p = sub.add_parser("summarize", help="recompute tables from stored draws")
    add_common(p)
    p.add_argument("--run-dir", help="directory holding a previous fit-bqr run")
    p.add_argument("--hpd-prob", type=float, help="override the stored HPD mass")
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    """Resolve defaults < config file < explicit flags into a RunConfig."""
    file_values: dict = {}
    if getattr(args, "config", None):
        try:
            file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None

    def pick(flag: str, default):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        if flag in file_values:
            return file_values[flag]
        return default

    grid = pick("grid", None)
    if isinstance(grid, str):
        grid = _parse_floats(grid)
    contrasts = pick("contrast", None) or pick("contrasts", None) or ()
    parsed_contrasts = []
    for c in contrasts:
        if isinstance(c, Contrast):
            parsed_contrasts.append(c)
        elif isinstance(c, dict):
            parsed_contrasts.append(Contrast(name=c["name"], terms=tuple(c["terms"])))
        else:
            parsed_contrasts.append(_parse_contrast(c))
    prior_mean = pick("prior_mean", None)
    if isinstance(prior_mean, str):
        prior_mean = _parse_floats(prior_mean)
    prior_variance = pick("prior_variance", None)
    if isinstance(prior_variance, str):
        prior_variance = _parse_floats(prior_variance)
    true_beta = pick("true_beta", None)
    if isinstance(true_beta, str):
        true_beta = _parse_floats(true_beta)
    hpd_raw = pick("hpd_prob", None)

    try:
        return RunConfig(
            subcommand=args.subcommand,
            input=pick("input", None),
            schema=pick("schema", None),
            output_dir=pick("output_dir", None),
            run_dir=pick("run_dir", None),
            grid=tuple(grid) if grid else DEFAULT_GRID,
            burn_in=int(pick("burn_in", 1000)),
            draws=int(pick("draws", 10000)),
            thin=int(pick("thin", 1)),
            seed=int(pick("seed", 0)),
            hpd_prob=float(hpd_raw) if hpd_raw is not None else 0.95,
            hpd_prob_set=hpd_raw is not None,
            prior_mean=tuple(prior_mean) if prior_mean is not None else None,
            prior_variance=tuple(prior_variance) if prior_variance is not None else None,
            contrasts=tuple(parsed_contrasts),
            jobs=int(pick("jobs", 0)),
            n=int(pick("n", 0)),
            true_beta=tuple(true_beta) if true_beta else (),
            covariates=pick("covariates", "") or "",
            error_family=pick("error_family", "ald") or "ald",
            tau=float(pick("tau", 0.5)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _progress(message: str) -> None:
    print(f"[bqreg] {message}", file=sys.stderr, flush=True)


def _prior_for(config: RunConfig, n_coef: int) -> GaussianPrior:
    def broadcast(values, what):
        if len(values) == 1:
            return np.full(n_coef, values[0])
        if len(values) != n_coef:
            raise UsageError(
                f"{what} has {len(values)} entries but the design has {n_coef} columns"
            )
        return np.asarray(values, dtype=np.float64)

    mean = (
        broadcast(config.prior_mean, "--prior-mean")
        if config.prior_mean is not None
        else np.zeros(n_coef)
    )
    if config.prior_variance is not None:
        variance = broadcast(config.prior_variance, "--prior-variance")
        if np.any(variance <= 0):
            raise UsageError("--prior-variance entries must be positive")
        covariance = np.diag(variance)
    else:
        covariance = 100.0 * np.eye(n_coef)
    return GaussianPrior(mean=mean, covariance=covariance)


def _tau_filename(tau: float) -> str:
    return f"draws_tau_{tau:.2f}.csv"


def _draws_to_csv(draws: PosteriorDraws) -> str:
    rows = ((format_float(v) for v in row) for row in draws.draws)
    return csv_text(list(draws.predictor_names), rows)


def _draws_from_csv(path: Path, tau: float, config: McmcConfig) -> PosteriorDraws:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    matrix = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PosteriorDraws(draws=matrix, tau=tau, predictor_names=header, config=config)


def _diagnostics_csv(results: dict[float, PosteriorDraws]) -> str:
    rows = []
    for tau in sorted(results):
        draws = results[tau]
        for j, name in enumerate(draws.predictor_names):
            column = draws.draws[:, j]
            # chains too short (or constant) for a diagnostic report nan
            try:
                ess = effective_sample_size(column)
            except ValueError:
                ess = float("nan")
            try:
                acf1 = float(autocorrelation(column, 1)[1])
            except ValueError:
                acf1 = float("nan")
            rows.append(
                (format_float(tau), name, format_float(ess), format_float(acf1))
            )
    return csv_text(["tau", "predictor", "ess", "acf_lag1"], rows)


def _load_input(config: RunConfig) -> Dataset:
    if not config.input or not config.schema:
        raise UsageError("--input and --schema are required")
    try:
        schema_text = Path(config.schema).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read schema: {exc}") from None
    try:
        schema = VariableSchema.from_json(schema_text)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"invalid schema: {exc}") from None
    if not os.path.exists(config.input):
        raise DataError(f"cannot read input: {config.input} does not exist")
    return load_dataset(config.input, schema)


def _require_output_dir(config: RunConfig) -> Path:
    if not config.output_dir:
        raise UsageError("--output-dir is required")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, config: RunConfig, wall: float, extra: dict) -> None:
    manifest = config.to_manifest()
    manifest["version"] = __version__
    manifest["wall_time_s"] = wall
    manifest.update(extra)
    write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True))


def _seed_map(chain_seeds: dict[float, int]) -> dict[str, int]:
    return {f"{tau:.2f}": seed for tau, seed in sorted(chain_seeds.items())}


def _write_forest_outputs(
    out: Path,
    results: dict[float, PosteriorDraws],
    hpd_prob: float,
    contrasts,
) -> None:
    table = build_forest_table(results, hpd_prob, contrasts=contrasts)
    write_text(out / "forest.csv", table.to_csv())
    write_text(out / "forest.json", table.to_json())
    write_text(out / "diagnostics.csv", _diagnostics_csv(results))


def cmd_fit_bqr(config: RunConfig) -> int:
    data = _load_input(config)
    prior = _prior_for(config, data.n_coef)
    if config.draws // config.thin < 10:
        raise UsageError(
            "draws/thin must leave at least 10 stored draws to summarize"
        )
    per_tau = grid_configs(config.mcmc(), config.grid)
    chain_seeds = {tau: cfg.seed for tau, cfg in per_tau}
    names = {_tau_filename(tau) for tau, _ in per_tau}
    if len(names) != len(per_tau):
        raise UsageError(
            "two grid levels collide at 2 decimal places in the file layout"
        )
    for contrast in config.contrasts:
        for term in contrast.terms:
            if term not in data.predictor_names:
                raise UsageError(
                    f"contrast {contrast.name!r} references unknown predictor {term!r}"
                )

    out = _require_output_dir(config)
    start = time.monotonic()
    jobs = config.jobs if config.jobs > 0 else (os.cpu_count() or 1)
    failures: dict[float, str] = {}
    try:
        results = run_grid(
            data,
            prior,
            config.mcmc(),
            config.grid,
            max_workers=jobs,
            progress=lambda tau: _progress(f"tau={tau:.2f} chain finished"),
        )
    except GridRunError as exc:
        results = exc.results
        failures = exc.failures

    for tau, draws in sorted(results.items()):
        write_text(out / _tau_filename(tau), _draws_to_csv(draws))
    if not failures:
        _write_forest_outputs(out, results, config.hpd_prob, config.contrasts)
        _write_manifest(
            out,
            config,
            time.monotonic() - start,
            {"chain_seeds": _seed_map(chain_seeds)},
        )
        _progress(f"run complete: {len(results)} chains -> {out}")
        return EXIT_OK
    report = {
        "error": {
            "category": "numerical",
            "message": "one or more grid chains failed",
            "per_tau": {f"{tau:.6g}": msg for tau, msg in sorted(failures.items())},
            "completed": [f"{tau:.6g}" for tau in sorted(results)],
        }
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_NUMERICAL


def cmd_fit_logit(config: RunConfig) -> int:
    data = _load_input(config)
    prior = _prior_for(config, data.n_coef)
    for contrast in config.contrasts:
        for term in contrast.terms:
            if term not in data.predictor_names:
                raise UsageError(
                    f"contrast {contrast.name!r} references unknown predictor {term!r}"
                )
    out = _require_output_dir(config)
    start = time.monotonic()
    posterior = fit_logit(data, prior, config.mcmc())
    _progress(f"logit chain finished (acceptance {posterior.acceptance_rate:.3f})")
    summary = summarize_logit(posterior, config.hpd_prob, contrasts=config.contrasts)

    rows = (
        (
            row.name,
            format_float(row.mean),
            format_float(row.lower),
            format_float(row.upper),
            "*" if row.significant else "",
        )
        for row in summary
    )
    write_text(
        out / "logit_summary.csv",
        csv_text(["name", "mean", "hpd_lower", "hpd_upper", "significant"], rows),
    )
    write_text(
        out / "logit_summary.json",
        json.dumps(
            {
                "hpd_prob": config.hpd_prob,
                "acceptance_rate": posterior.acceptance_rate,
                "rows": [dataclasses.asdict(row) for row in summary],
            },
            indent=2,
            sort_keys=True,
        ),
    )
    rows = ((format_float(v) for v in row) for row in posterior.draws)
    write_text(
        out / "logit_draws.csv", csv_text(list(posterior.predictor_names), rows)
    )
    _write_manifest(
        out,
        config,
        time.monotonic() - start,
        {"acceptance_rate": posterior.acceptance_rate},
    )
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    if config.n <= 0:
        raise UsageError("--n must be a positive sample size")
    if not config.true_beta:
        raise UsageError("--true-beta is required")
    if not config.covariates:
        raise UsageError("--covariates is required")
    spec = SyntheticSpec(
        n=config.n,
        true_beta=config.true_beta,
        covariates=_parse_covariates(config.covariates),
        error_family=config.error_family,
        tau=config.tau,
        seed=config.seed,
    )
    dataset, truth = generate_synthetic(spec)
    out = _require_output_dir(config)
    start = time.monotonic()
    write_text(out / "dataset.csv", dataset_to_csv(dataset))
    write_text(out / "truth.json", truth.to_json())
    write_text(out / "schema.json", numeric_schema_for(dataset).to_json())
    _write_manifest(out, config, time.monotonic() - start, {})
    _progress(f"wrote {dataset.n} rows -> {out}")
    return EXIT_OK


def cmd_summarize(config: RunConfig) -> int:
    if not config.run_dir:
        raise UsageError("--run-dir is required")
    run_dir = Path(config.run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {run_dir}; not a fit-bqr run directory")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    grid = [float(t) for t in manifest.get("grid", [])]
    if not grid:
        raise DataError(f"manifest in {run_dir} declares no quantile grid")
    hpd_prob = config.hpd_prob if config.hpd_prob_set else float(manifest["hpd_prob"])
    contrasts = tuple(
        Contrast(name=c["name"], terms=tuple(c["terms"]))
        for c in manifest.get("contrasts", [])
    )
    seed_map = {k: int(v) for k, v in manifest.get("chain_seeds", {}).items()}
    results: dict[float, PosteriorDraws] = {}
    missing = []
    for tau in grid:
        path = run_dir / _tau_filename(tau)
        if not path.exists():
            missing.append(str(path))
            continue
        cfg = McmcConfig(
            burn_in=int(manifest["burn_in"]),
            draws=int(manifest["draws"]),
            thin=int(manifest["thin"]),
            seed=seed_map.get(f"{tau:.2f}", 0),
        )
        try:
            results[tau] = _draws_from_csv(path, tau, cfg)
        except ValueError as exc:
            raise DataError(f"corrupt draw file {path}: {exc}") from None
    if missing:
        raise DataError(f"missing draw files: {', '.join(missing)}")

    out = Path(config.output_dir) if config.output_dir else run_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_forest_outputs(out, results, hpd_prob, contrasts)
    _progress(f"summaries rebuilt -> {out}")
    return EXIT_OK


_COMMANDS = {
    "fit-bqr": cmd_fit_bqr,
    "fit-logit": cmd_fit_logit,
    "simulate": cmd_simulate,
    "summarize": cmd_summarize,
}


def _error_report(category: str, message: str) -> None:
    print(
        json.dumps(
            {"error": {"category": category, "message": message}},
            indent=2,
            sort_keys=True,
        )
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; remap to the documented code
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        config = _merge_config(args)
        return _COMMANDS[args.subcommand](config)
    except UsageError as exc:
        _error_report("usage", str(exc))
        return EXIT_USAGE
    except DataError as exc:
        _error_report("data", str(exc))
        return EXIT_DATA
    except ValueError as exc:
        _error_report("usage", str(exc))
        return EXIT_USAGE
    except NumericalError as exc:
        _error_report("numerical", str(exc))
        return EXIT_NUMERICAL
    except OSError as exc:
        _error_report("data", str(exc))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

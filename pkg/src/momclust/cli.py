"""Experiment runner and command line interface.

Verbs::

    momclust generate --config cfg.json --out data.csv
    momclust fit      --config cfg.json --out runs.csv      # replicated experiment
    momclust fit      --data data.csv --method mom_power --k 10 --out fit.json
    momclust eval     --data data.csv --fit fit.json --out metrics.json
    momclust sweep    --config sweep.json --out sweep.csv
    momclust bounds   --config bounds.json --out bounds.json
    momclust rate     --config rate.json --out rate.json

Config files are JSON objects whose keys mirror :class:`ExperimentConfig`.
Outputs depend only on the inputs and the master seed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import theory
from .aggregate import get_aggregator
from .bregman import get_divergence
from .metrics import ari, diss, precision_recall
from .solver import FitResult, SolverConfig, assign_labels, fit, lloyd
from .synth import Dataset, ScenarioSpec, generate, read_csv, true_centroids, write_csv

logger = logging.getLogger("momclust")

# method id -> (estimator, aggregator or Lloyd init)
METHODS = {
    "kmeans_lloyd": ("lloyd", "sample"),
    "kmeans_pp": ("lloyd", "kmeans++"),
    "erm_power": ("erm", "power"),
    "erm_harmonic": ("erm", "harmonic"),
    "mom_kmeans": ("mom", "min"),
    "mom_power": ("mom", "power"),
    "mom_harmonic": ("mom", "harmonic"),
}
SWEEP_AXES = ("k_true", "outlier_fraction")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: Union[ScenarioSpec, str] = field(default_factory=ScenarioSpec)
    method: str = "mom_power"
    solver: SolverConfig = field(default_factory=SolverConfig)
    replicates: int = 1
    k_fit: Optional[int] = None
    L: Optional[int] = None
    output_path: Optional[str] = None
    seed: int = 0
    workers: int = 1
    divergence: str = "sqeuclidean"
    divergence_params: dict = field(default_factory=dict)
    record_timing: bool = False
    # sweep-only
    axis: Optional[str] = None
    values: Optional[list] = None
    methods: Optional[list] = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"field 'method': unknown method {self.method!r}; choose from {sorted(METHODS)}")
        for m in self.methods or []:
            if m not in METHODS:
                raise ConfigError(f"field 'methods': unknown method {m!r}")
        if self.replicates < 1:
            raise ConfigError("field 'replicates': must be >= 1")
        if self.workers < 1:
            raise ConfigError("field 'workers': must be >= 1")
        if self.k_fit is not None and self.k_fit < 1:
            raise ConfigError("field 'k_fit': must be >= 1")
        if self.L is not None and self.L < 1:
            raise ConfigError("field 'L': must be >= 1")
        if isinstance(self.scenario, ScenarioSpec):
            try:
                self.scenario.validate()
            except ValueError as e:
                raise ConfigError(f"field 'scenario': {e}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        d = dict(d)
        if isinstance(d.get("scenario"), dict):
            d["scenario"] = _build(ScenarioSpec, d["scenario"], "scenario")
        if isinstance(d.get("solver"), dict):
            d["solver"] = _build(SolverConfig, d["solver"], "solver")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build(klass, d: dict, where: str):
    known = {f.name for f in fields(klass)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) in '{where}': {', '.join(unknown)}")
    return klass(**d)


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None


@dataclass
class RunRecord:
    replicate: int
    seed: int
    method: str
    k_true: Optional[int]
    p: int
    points_per_cluster: Optional[int]
    outlier_fraction: Optional[float]
    outlier_model: Optional[str]
    n: int
    n_outliers: int
    L: Optional[int]
    k_fit: int
    objective: float
    iterations: int
    converged: bool
    ari: float
    precision: float
    recall: float
    diss: float
    wall_ms: Optional[float] = None


RECORD_FIELDS = [f.name for f in fields(RunRecord)]


def replicate_seed(master: int, replicate: int) -> int:
    """Child seed for replicate ``replicate`` of master seed ``master``."""
    return int(np.random.SeedSequence([master, replicate]).generate_state(1, np.uint32)[0])


def default_L(n_outliers: int, n: int) -> int:
    """Odd ``L`` about twice the outlier count, at least 3 and at most ``n``."""
    L = max(3, 2 * n_outliers + 1)
    L = min(L, n)
    if L % 2 == 0:
        L -= 1
    return max(L, 1)


def fit_method(method: str, X: np.ndarray, k: int, solver: SolverConfig, seed: int,
               L: Optional[int] = None, n_outliers: int = 0, divergence=None) -> tuple[FitResult, Optional[int]]:
    """Fit one of :data:`METHODS`. Returns the result and the ``L`` used."""
    estimator, kind = METHODS[method]
    if estimator == "lloyd":
        return lloyd(X, k, seed=seed, init=kind), None
    div = divergence or get_divergence("sqeuclidean")
    agg = get_aggregator(kind, k, solver.s_initial)
    if estimator == "mom":
        L = L if L is not None else default_L(n_outliers, X.shape[0])
    else:
        L = 1
    cfg = dataclasses.replace(solver, estimator=estimator, L=L, seed=seed)
    return fit(X, k, div, agg, cfg), (L if estimator == "mom" else None)


def evaluate_fit(ds: Dataset, labels: np.ndarray, theta: np.ndarray,
                 truth_theta: Optional[np.ndarray] = None) -> dict:
    """ARI and precision/recall on inliers; ``diss`` to the true centers when known."""
    inl = ds.inliers
    out = {"ari": math.nan, "precision": math.nan, "recall": math.nan, "diss": math.nan}
    if ds.labels is not None and inl.sum() >= 2:
        out["ari"] = ari(ds.labels[inl], labels[inl])
        out["precision"], out["recall"] = precision_recall(labels[inl], ds.labels[inl])
    if truth_theta is not None and truth_theta.shape == theta.shape:
        out["diss"] = diss(theta, truth_theta)
    return out


def _run_replicate(cfg: ExperimentConfig, method: str, rep: int, dataset: Optional[Dataset]) -> RunRecord:
    seed = replicate_seed(cfg.seed, rep)
    if isinstance(cfg.scenario, ScenarioSpec):
        spec = dataclasses.replace(cfg.scenario, seed=seed)
        ds = generate(spec)
        truth = true_centroids(spec).theta
    else:
        spec, ds, truth = None, dataset, None
    k_fit = cfg.k_fit or (spec.k_true if spec else int(np.unique(ds.labels[ds.inliers]).size))
    div = get_divergence(cfg.divergence, **cfg.divergence_params)
    n_out = int(ds.is_outlier.sum())
    start = time.perf_counter()
    res, L = fit_method(method, ds.X, k_fit, cfg.solver, seed, cfg.L, n_out, div)
    elapsed = (time.perf_counter() - start) * 1e3
    scores = evaluate_fit(ds, res.labels, res.centroids.theta, truth)
    return RunRecord(
        replicate=rep, seed=seed, method=method,
        k_true=spec.k_true if spec else None, p=ds.p,
        points_per_cluster=spec.points_per_cluster if spec else None,
        outlier_fraction=spec.outlier_fraction if spec else None,
        outlier_model=spec.outlier_model if spec else None,
        n=ds.n, n_outliers=n_out, L=L, k_fit=k_fit,
        objective=res.objective, iterations=res.iterations, converged=res.converged,
        wall_ms=elapsed if cfg.record_timing else None,
        **scores,
    )


def run_experiment(cfg: ExperimentConfig, methods: Optional[list] = None) -> list[RunRecord]:
    """Generate (or load), fit and score ``cfg.replicates`` times per method.

    Replicate ``r`` uses the seed :func:`replicate_seed` ``(cfg.seed, r)`` for
    both data generation and fitting, so records are identical whatever
    ``cfg.workers`` is.
    """
    cfg.validate()
    methods = methods or [cfg.method]
    dataset = None if isinstance(cfg.scenario, ScenarioSpec) else read_csv(cfg.scenario)
    tasks = [(cfg, m, r, dataset) for r in range(cfg.replicates) for m in methods]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_replicate_args, tasks))
    else:
        records = [_run_replicate(*t) for t in tasks]
    return records


def _run_replicate_args(args):
    return _run_replicate(*args)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.17g}"
    return str(v)


def records_to_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


SWEEP_FIELDS = ["axis", "value", "method", "replicates", "ari_mean", "ari_sd",
                "precision_mean", "recall_mean", "diss_mean"]


def sweep(cfg: ExperimentConfig, axis: str, values: list, methods: Optional[list] = None) -> list[dict]:
    """Run :func:`run_experiment` for each value of ``axis``; aggregate per method.

    Returns one row per ``(value, method)`` with mean and standard deviation
    (``ddof=1``; 0 for a single replicate) of inlier ARI.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    if not values:
        raise ValueError("sweep needs at least one value")
    if not isinstance(cfg.scenario, ScenarioSpec):
        raise ValueError("sweep needs a generated scenario, not a dataset file")
    methods = methods or cfg.methods or [cfg.method]
    rows = []
    for v in values:
        v = int(v) if axis == "k_true" else float(v)
        point = dataclasses.replace(cfg, scenario=dataclasses.replace(cfg.scenario, **{axis: v}))
        records = run_experiment(point, methods)
        for m in methods:
            mine = [r for r in records if r.method == m]
            a = np.array([r.ari for r in mine])
            rows.append({
                "axis": axis, "value": v, "method": m, "replicates": len(mine),
                "ari_mean": float(a.mean()),
                "ari_sd": float(a.std(ddof=1)) if len(a) > 1 else 0.0,
                "precision_mean": float(np.mean([r.precision for r in mine])),
                "recall_mean": float(np.mean([r.recall for r in mine])),
                "diss_mean": float(np.mean([r.diss for r in mine])),
            })
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for row in rows:
        w.writerow([_fmt(row[f]) for f in SWEEP_FIELDS])
    return buf.getvalue()


# --------------------------------------------------------------------------
# command line


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _experiment_config(args) -> ExperimentConfig:
    d = load_config(args.config) if args.config else {}
    cfg = ExperimentConfig.from_dict(d)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.method is not None:
        cfg.method = args.method
    if args.k is not None:
        cfg.k_fit = args.k
        if isinstance(cfg.scenario, ScenarioSpec) and "k_true" not in d.get("scenario", {}):
            cfg.scenario = dataclasses.replace(cfg.scenario, k_true=args.k)
    if args.L is not None:
        cfg.L = args.L
    if args.outlier_frac is not None and isinstance(cfg.scenario, ScenarioSpec):
        cfg.scenario = dataclasses.replace(cfg.scenario, outlier_fraction=args.outlier_frac)
    if args.replicates is not None:
        cfg.replicates = args.replicates
    if args.workers is not None:
        cfg.workers = args.workers
    if args.data is not None:
        cfg.scenario = args.data
    if args.out is None:
        args.out = cfg.output_path
    cfg.validate()
    return cfg


def cmd_generate(args) -> None:
    cfg = _experiment_config(args)
    if not isinstance(cfg.scenario, ScenarioSpec):
        raise ConfigError("generate needs a scenario spec, not a dataset file")
    # the same draw that replicate 0 of ``fit`` uses
    ds = generate(dataclasses.replace(cfg.scenario, seed=replicate_seed(cfg.seed, 0)))
    if args.out:
        write_csv(ds, args.out)
    else:
        write_csv(ds, sys.stdout)


def cmd_fit(args) -> None:
    cfg = _experiment_config(args)
    if args.data is None:
        _write(records_to_csv(run_experiment(cfg)), args.out)
        return
    ds = read_csv(args.data)
    k = cfg.k_fit or int(np.unique(ds.labels[ds.inliers]).size)
    div = get_divergence(cfg.divergence, **cfg.divergence_params)
    res, L = fit_method(cfg.method, ds.X, k, cfg.solver, cfg.seed, cfg.L, int(ds.is_outlier.sum()), div)
    out = {
        "method": cfg.method, "k": k, "L": L, "seed": cfg.seed,
        "centroids": res.centroids.theta.tolist(),
        "box_bound": res.centroids.box_bound,
        "labels": res.labels.tolist(),
        "objective": res.objective,
        "iterations": res.iterations,
        "converged": res.converged,
    }
    _write(_dumps(out), args.out)


def cmd_eval(args) -> None:
    if args.data is None or args.fit is None:
        raise ConfigError("eval needs --data and --fit")
    ds = read_csv(args.data)
    fitted = json.loads(Path(args.fit).read_text())
    theta = np.asarray(fitted["centroids"], dtype=float)
    div = get_divergence("sqeuclidean")
    labels = np.asarray(fitted.get("labels") or assign_labels(ds.X, theta, div))
    truth = None
    if args.config:
        cfg = ExperimentConfig.from_dict(load_config(args.config))
        if isinstance(cfg.scenario, ScenarioSpec):
            truth = true_centroids(cfg.scenario).theta
    _write(_dumps(evaluate_fit(ds, labels, theta, truth)), args.out)


def cmd_sweep(args) -> None:
    cfg = _experiment_config(args)
    if not cfg.axis or cfg.values is None:
        raise ConfigError("sweep config needs fields 'axis' and 'values'")
    _write(sweep_to_csv(sweep(cfg, cfg.axis, cfg.values, cfg.methods)), args.out)


def cmd_bounds(args) -> None:
    d = load_config(args.config) if args.config else {}
    delta_cover = d.pop("cover_delta", 1.0)
    b = _build(theory.BoundInputs, d, "bounds")
    out = {
        "inputs": b.to_dict(),
        "rademacher_bound": theory.rademacher_bound(b),
        "deviation_bound": theory.deviation_bound(b),
        "sup_norm_bound": theory.sup_norm_bound(b),
        "diameter_bound": theory.diameter_bound(b),
        "cover_delta": delta_cover,
        "log_covering_number_bound": math.log(theory.covering_number_bound(delta_cover, b)),
    }
    try:
        eps, conf = theory.mom_bound(b)
        out["mom_bound"] = {"epsilon": eps, "confidence": conf}
    except ValueError as e:
        out["mom_bound"] = {"error": str(e)}
    _write(_dumps(out), args.out)


RATE_DEFAULTS = {
    "k": 2, "p": 2, "aggregator": "min", "s": -1.0, "divergence": "sqeuclidean",
    "box_bound": 1.0, "mixture_sd": 0.3, "n_values": [2**i for i in range(7, 14)],
    "replicates": 20, "n_reference": 1_000_000, "n_random_thetas": 20, "seed": 0,
}


def run_rate(d: dict) -> theory.RateReport:
    unknown = sorted(set(d) - set(RATE_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown rate config field(s): {', '.join(unknown)}")
    c = {**RATE_DEFAULTS, **d}
    k, p, M = c["k"], c["p"], c["box_bound"]
    # mixture centers on the diagonal of the box
    centers = np.linspace(-M / 2, M / 2, k)[:, None] * np.ones(p)
    sampler = theory.mixture_sampler(centers, c["mixture_sd"], M)
    return theory.empirical_deviation(
        get_divergence(c["divergence"]), get_aggregator(c["aggregator"], k, c["s"]),
        sampler, [centers], c["n_values"], c["replicates"], seed=c["seed"],
        n_reference=c["n_reference"], n_random_thetas=c["n_random_thetas"], box_bound=M,
    )


def cmd_rate(args) -> None:
    d = load_config(args.config) if args.config else {}
    if args.seed is not None:
        d["seed"] = args.seed
    if args.replicates is not None:
        d["replicates"] = args.replicates
    if args.k is not None:
        d["k"] = args.k
    _write(_dumps(run_rate(d).to_dict()), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="momclust", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, func in [("generate", cmd_generate), ("fit", cmd_fit), ("sweep", cmd_sweep),
                       ("bounds", cmd_bounds), ("rate", cmd_rate), ("eval", cmd_eval)]:
        p = sub.add_parser(verb)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--method", choices=sorted(METHODS))
        p.add_argument("--k", type=int, help="number of clusters to fit")
        p.add_argument("--L", type=int, help="number of median-of-means blocks")
        p.add_argument("--outlier-frac", type=float, dest="outlier_frac")
        p.add_argument("--replicates", type=int)
        p.add_argument("--out", help="output file (stdout if omitted)")
        p.add_argument("--workers", type=int)
        p.add_argument("--data", help="dataset CSV")
        p.add_argument("--fit", help="fit result JSON (eval only)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"momclust {args.verb}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Seeded multi-trial experiments and their CSV/JSON reports."""
from __future__ import annotations

import csv
import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .design import design_low_coherence, designed_anchor_set, frobenius_objective
from .errors import DomainError, ExperimentAborted, LocalizationError, ReportIOError
from .geometry import AnchorSet, assemble_rhs, build_system, squared_distance_matrix
from .linalg import coherence, kmeans, welch_bound
from .metrics import estimation_metrics, identification_accuracy
from .robust import (
    SRPCA_LAMBDAS,
    annihilator,
    budget_from_coherence,
    estimate_position,
    identify_corrupted,
    naive_identify,
    srpca_identify,
)
from .scenario import (
    CorruptionSpec,
    RegionSpec,
    corrupt_additive_mixture,
    corrupt_multiplicative,
    generate_scenario,
)

log = logging.getLogger(__name__)

EXPERIMENT_IDS = ("exp1", "exp2", "baseline_compare", "design_study")
METHODS = ("ours", "srpca", "naive")
COLUMNS = (
    "experiment_id", "method", "m", "trial", "ia", "mre", "msp", "msd", "madr",
    "converged_fraction", "seed",
)
METRIC_FIELDS = ("ia", "mre", "msp", "msd", "madr", "converged_fraction")
SEED_STRIDE = 1000


@dataclass(frozen=True)
class AdditiveSpec:
    beta: float = 0.75
    sigma: float = 0.01
    a: float = -100.0
    b: float = 100.0
    alpha: int = 4
    mode: str = "convex"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    m_values: tuple = (6, 9, 12, 15)
    trials: int = 50
    base_seed: int = 0
    region: RegionSpec = field(default_factory=RegionSpec)
    corruption: CorruptionSpec | None = None
    additive: AdditiveSpec | None = None
    methods: tuple = METHODS
    pipeline: bool = False
    srpca_lambdas: tuple = SRPCA_LAMBDAS
    r: int = 2
    recovery_instances: int = 10
    max_failure_fraction: float = 0.2

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise DomainError(f"unknown experiment {self.experiment_id!r}; expected one of {EXPERIMENT_IDS}")
        if int(self.trials) < 1:
            raise DomainError("trials must be >= 1")
        if not self.m_values:
            raise DomainError("m_values must be non-empty")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise DomainError(f"unknown methods {sorted(bad)}")
        for name in ("m_values", "methods", "srpca_lambdas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["m_values"] = list(self.m_values)
        d["methods"] = list(self.methods)
        d["srpca_lambdas"] = list(self.srpca_lambdas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        base = default_config(d.pop("experiment_id"))
        if "region" in d:
            d["region"] = RegionSpec.from_dict(d["region"])
        if d.get("corruption") is not None:
            d["corruption"] = CorruptionSpec(**d["corruption"])
        if d.get("additive") is not None:
            d["additive"] = AdditiveSpec(**d["additive"])
        return replace(base, **d)


def default_config(experiment_id: str, **overrides) -> ExperimentConfig:
    """Parameters of the published experiments, optionally overridden."""
    if experiment_id == "exp1":
        cfg = ExperimentConfig("exp1", corruption=CorruptionSpec(4, 3, (0.0, 0.0), (0.2, 0.25)))
    elif experiment_id == "exp2":
        cfg = ExperimentConfig("exp2", corruption=CorruptionSpec(4, 3, (0.0, 0.05), (0.15, 0.2)))
    elif experiment_id == "baseline_compare":
        cfg = ExperimentConfig("baseline_compare", additive=AdditiveSpec(), methods=("ours",))
    elif experiment_id == "design_study":
        cfg = ExperimentConfig("design_study", m_values=(15,), trials=100, methods=("ours",))
    else:
        raise DomainError(f"unknown experiment {experiment_id!r}")
    return replace(cfg, **overrides)


@dataclass
class ExperimentReport:
    experiment_id: str
    config: dict
    rows: list
    aggregates: list
    failures: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def aggregate(self, method: str, m: int) -> dict:
        for row in self.aggregates:
            if row["method"] == method and row["m"] == m:
                return row
        raise KeyError((method, m))

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "columns": list(COLUMNS),
            "config": self.config,
            "provenance": self.provenance,
            "rows": self.rows,
            "aggregates": self.aggregates,
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(
            experiment_id=d["experiment_id"],
            config=d["config"],
            rows=d["rows"],
            aggregates=d["aggregates"],
            failures=d.get("failures", []),
            provenance=d.get("provenance", {}),
        )


def trial_seeds(base_seed: int, trial: int) -> tuple[int, int]:
    """Scenario and corruption seeds; they depend on the trial only, never on the method."""
    s = base_seed + SEED_STRIDE * trial
    return s, s + 1


def _row(cfg, method, m, trial, seed, ia=None, metrics=None, converged=1.0, extras=None):
    row = {
        "experiment_id": cfg.experiment_id,
        "method": method,
        "m": m,
        "trial": trial,
        "ia": ia,
        "mre": None,
        "msp": None,
        "msd": None,
        "madr": None,
        "converged_fraction": float(converged),
        "seed": seed,
    }
    if metrics is not None:
        row.update(mre=metrics.mre, msp=metrics.msp, msd=metrics.msd, madr=metrics.madr)
    if extras:
        row["extras"] = extras
    return row


def _estimate_nodes(anchors, system, R, M_tilde, nodes):
    ests = [estimate_position(anchors, M_tilde[:, i], system=system, R=R) for i in nodes]
    positions = np.array([e.position for e in ests])
    converged = float(np.mean([e.converged for e in ests]))
    return positions, converged


def run_trial(cfg: ExperimentConfig, m: int, trial: int) -> list:
    """All method rows for one (m, trial) pair."""
    scen_seed, corr_seed = trial_seeds(cfg.base_seed, trial)
    scenario = generate_scenario(cfg.region, m, scen_seed)
    if cfg.additive is not None:
        add = cfg.additive
        data = corrupt_additive_mixture(scenario, add.beta, add.sigma, add.a, add.b, corr_seed,
                                        alpha=add.alpha, mode=add.mode)
        has_truth = False
    else:
        data = corrupt_multiplicative(scenario, cfg.corruption, corr_seed)
        has_truth = True
    anchors = scenario.anchors
    truth = list(data.truth_corrupted_nodes)
    alpha = len(truth)
    system = build_system(anchors)
    R = annihilator(anchors, system)
    M_tilde = assemble_rhs(system, data.F_tilde)
    targets = scenario.targets
    D_clean = np.sqrt(data.F_clean)
    D_corr = np.sqrt(data.F_tilde)

    rows = []
    for method in cfg.methods:
        if method == "ours":
            ident = identify_corrupted(anchors, M_tilde, alpha, system=system, R=R)
            ia = identification_accuracy(ident.indices, truth) if has_truth else None
            est, conv = _estimate_nodes(anchors, system, R, M_tilde, truth)
            met = estimation_metrics(targets[truth], est, anchors, D_clean, D_corr, truth, ia=ia)
            rows.append(_row(cfg, "ours", m, trial, scen_seed, ia, met, conv))
            if cfg.pipeline:
                found = sorted(ident.indices)
                est, conv = _estimate_nodes(anchors, system, R, M_tilde, found)
                met = estimation_metrics(targets[found], est, anchors, D_clean, D_corr, found, ia=ia)
                rows.append(_row(cfg, "ours_pipeline", m, trial, scen_seed, ia, met, conv))
        elif method == "naive":
            ident = naive_identify(data.F_tilde, alpha)
            ia = identification_accuracy(ident.indices, truth) if has_truth else None
            rows.append(_row(cfg, "naive", m, trial, scen_seed, ia))
        elif method == "srpca":
            ident = srpca_identify(data.F_tilde, alpha, cfg.srpca_lambdas)
            ia = identification_accuracy(ident.indices, truth) if has_truth else None
            rows.append(_row(cfg, "srpca", m, trial, scen_seed, ia, converged=ident.converged_fraction))
    return rows


# design study

def kmeans_anchor_set(m: int, r: int, seed: int, *, extent=400.0, cloud=1000) -> AnchorSet:
    """K-means anchors on a uniform cloud; matches :func:`generate_scenario` for r = 2."""
    rng = np.random.default_rng(seed)
    if r == 2:
        points = RegionSpec().near_box.sample(rng, cloud)
    else:
        points = rng.uniform(-extent, extent, (cloud, r))
    return AnchorSet(kmeans(points, m, seed), central_index=m - 1)


def empirical_recovery(anchors: AnchorSet, seed: int, instances: int = 10, tol=1e-6) -> tuple[int, float]:
    """Largest k for which every planted k-outlier instance is recovered exactly.

    Targets are drawn in a box three times the anchor extent; ``k``
    non-central squared distances are inflated by 20-25 %. Returns the
    recovered k and the fraction of converged l1 solves.
    """
    system = build_system(anchors)
    R = annihilator(anchors, system)
    extent = np.max(np.abs(anchors.positions - anchors.central))
    others = anchors.others
    best, solves, conv = 0, 0, 0
    for k in range(1, R.shape[0] + 1):
        rng = np.random.default_rng([seed, k])
        ok = True
        for _ in range(instances):
            q = anchors.central + rng.uniform(-3 * extent, 3 * extent, anchors.dim)
            d2 = squared_distance_matrix(anchors, q)[:, 0]
            js = rng.choice(others, k, replace=False)
            d2[js] *= 1.0 + rng.uniform(0.2, 0.25, k)
            est = estimate_position(anchors, assemble_rhs(system, d2), system=system, R=R)
            solves += 1
            conv += est.converged
            if np.linalg.norm(est.position - q) > tol * (1 + np.linalg.norm(q)):
                ok = False
                break
        if not ok:
            break
        best = k
    return best, conv / max(solves, 1)


def design_trial(cfg: ExperimentConfig, m: int, trial: int) -> list:
    r = cfg.r
    seed, _ = trial_seeds(cfg.base_seed, trial)
    R_bar, _ = design_low_coherence(m, r, seed)
    layouts = {
        "designed": designed_anchor_set(m, r, seed),
        "kmeans": kmeans_anchor_set(m, r, seed),
    }
    p, n = R_bar.shape
    wb = welch_bound(p, n)
    rows = []
    for name, anchors in layouts.items():
        R = R_bar if name == "designed" else annihilator(anchors)
        mu = coherence(R)
        k_rec, conv = empirical_recovery(anchors, seed, cfg.recovery_instances)
        extras = {
            "coherence": mu,
            "welch_bound": wb,
            "k_max": budget_from_coherence(mu, n).k_max,
            "k_recovered": k_rec,
            "frobenius_objective": frobenius_objective(R),
            "ones_residual": float(np.max(np.abs(R @ np.ones(n)))),
            "orthonormality_residual": float(np.max(np.abs(R @ R.T - np.eye(p)))),
        }
        rows.append(_row(cfg, name, m, trial, seed, converged=conv, extras=extras))
    return rows


def run_design_study(m: int, r: int, trials: int, base_seed: int, **kw) -> ExperimentReport:
    """Paired comparison of designed and K-means layouts for one ``(m, r)``."""
    cfg = default_config("design_study", m_values=(m,), r=r, trials=trials, base_seed=base_seed, **kw)
    return run_experiment(cfg)


# driver

def _mean(values):
    return math.fsum(values) / len(values)


def aggregate_rows(rows: list) -> list:
    """Per (method, m) arithmetic means; ``None`` entries are skipped."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["method"], row["m"]), []).append(row)
    out = []
    for (method, m), group in sorted(groups.items()):
        agg = dict(group[0])
        agg["trial"] = "mean"
        agg["seed"] = None
        for key in METRIC_FIELDS:
            vals = [r[key] for r in group if r[key] is not None]
            agg[key] = _mean(vals) if vals else None
        if "extras" in group[0]:
            agg["extras"] = {
                key: _mean([r["extras"][key] for r in group]) for key in group[0]["extras"]
            }
        out.append(agg)
    return out


def _task(args):
    cfg, m, trial = args
    fn = design_trial if cfg.experiment_id == "design_study" else run_trial
    try:
        return m, trial, fn(cfg, m, trial), None
    except (LocalizationError, np.linalg.LinAlgError) as exc:
        return m, trial, [], f"{type(exc).__name__}: {exc}"


def provenance() -> dict:
    return {
        "package": "robustloc",
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "seed_rule": f"scenario = base_seed + {SEED_STRIDE}*trial; corruption = scenario + 1",
    }


def run_experiment(cfg: ExperimentConfig, *, workers: int = 1) -> ExperimentReport:
    """Run every (m, trial) pair of ``cfg`` and aggregate per (method, m).

    Trials that raise are recorded in ``failures`` and excluded from the
    aggregates; :class:`ExperimentAborted` is raised when more than
    ``max_failure_fraction`` of them fail.
    """
    tasks = [(cfg, m, t) for m in cfg.m_values for t in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]

    rows, failures = [], []
    for m, trial, trial_rows, error in results:
        if error is not None:
            log.warning("trial m=%d t=%d failed: %s", m, trial, error)
            failures.append({"m": m, "trial": trial, "error": error})
        rows.extend(trial_rows)
    if len(failures) > cfg.max_failure_fraction * len(tasks):
        raise ExperimentAborted(f"{len(failures)} of {len(tasks)} trials failed")
    rows.sort(key=lambda r: (r["method"], r["m"], r["trial"]))
    return ExperimentReport(
        experiment_id=cfg.experiment_id,
        config=cfg.to_dict(),
        rows=rows,
        aggregates=aggregate_rows(rows),
        failures=failures,
        provenance=provenance(),
    )


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def write_report(report: ExperimentReport, fmt: str, fh) -> None:
    """Write the report to an open text stream as CSV or JSON.

    CSV holds the raw rows followed by the aggregate rows (``trial = mean``).
    """
    if fmt == "json":
        fh.write(report_json(report))
        fh.write("\n")
        return
    if fmt != "csv":
        raise DomainError(f"unknown report format {fmt!r}")
    writer = csv.DictWriter(fh, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in report.rows + report.aggregates:
        writer.writerow({k: ("" if row.get(k) is None else row[k]) for k in COLUMNS})


def emit_report(report: ExperimentReport, fmt: str, path) -> None:
    """Write the report to ``path``; I/O errors become :class:`ReportIOError`."""
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown report format {fmt!r}")
    try:
        with open(path, "w", newline="") as fh:
            write_report(report, fmt, fh)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc


def load_report(path) -> ExperimentReport:
    with open(path) as fh:
        return ExperimentReport.from_dict(json.load(fh))

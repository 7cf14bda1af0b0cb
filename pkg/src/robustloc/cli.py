"""Command line entry point: ``robustloc <command> [options]``.

Experiment commands (``exp1``, ``exp2``, ``compare``, ``design``) write a
CSV or JSON report. ``scenario`` writes a replay file, which ``identify``
and ``estimate`` read back through ``--scenario``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .errors import ExperimentAborted, LocalizationError
from .experiments import (
    ExperimentConfig,
    default_config,
    emit_report,
    run_experiment,
    trial_seeds,
    write_report,
)
from .geometry import assemble_rhs, build_system
from .metrics import estimation_metrics, identification_accuracy
from .robust import annihilator, estimate_position, identify_corrupted, naive_identify, srpca_identify
from .scenario import (
    corrupt_additive_mixture,
    corrupt_multiplicative,
    corrupted_from_dict,
    corrupted_to_dict,
    generate_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

log = logging.getLogger("robustloc")

EXPERIMENT_COMMANDS = {
    "exp1": "exp1",
    "exp2": "exp2",
    "compare": "baseline_compare",
    "design": "design_study",
}


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    p.add_argument("--alpha", type=int, default=None, help="number of severely corrupted targets")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, eid in EXPERIMENT_COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {eid} experiment")
        _common(p)
        p.add_argument("--m", type=int, nargs="+", default=None, help="anchor counts")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--k", type=int, default=None, help="corrupted anchors per severe target")
        p.add_argument("--config", default=None, help="JSON file overriding the defaults")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--pipeline", action="store_true", help="also estimate on the identified set")

    p = sub.add_parser("scenario", help="write a scenario replay file")
    _common(p)
    p.add_argument("--m", type=int, default=9)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--model", choices=("exp1", "exp2", "compare"), default="exp1")

    for name, helptext in (("identify", "identify corrupted targets"), ("estimate", "estimate target positions")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--scenario", required=True, help="replay file written by 'robustloc scenario'")
        if name == "identify":
            p.add_argument("--method", choices=("ours", "srpca", "naive"), default="ours")
        else:
            p.add_argument("--nodes", type=int, nargs="+", default=None,
                           help="target indices (default: the recorded corrupted set)")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    eid = EXPERIMENT_COMMANDS[args.command]
    if args.config:
        with open(args.config) as fh:
            d = json.load(fh)
        d["experiment_id"] = eid
        cfg = ExperimentConfig.from_dict(d)
    else:
        cfg = default_config(eid)
    over = {}
    if args.m:
        over["m_values"] = tuple(args.m)
    if args.trials is not None:
        over["trials"] = args.trials
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.pipeline:
        over["pipeline"] = True
    if cfg.corruption is not None and (args.alpha is not None or args.k is not None):
        changes = {"alpha": args.alpha, "k": args.k}
        over["corruption"] = dataclasses.replace(
            cfg.corruption, **{k: v for k, v in changes.items() if v is not None}
        )
    if cfg.additive is not None and args.alpha is not None:
        over["additive"] = dataclasses.replace(cfg.additive, alpha=args.alpha)
    return dataclasses.replace(cfg, **over)


def _write_text(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _run_experiment(args) -> int:
    cfg = _config_from_args(args)
    report = run_experiment(cfg, workers=args.workers)
    fmt = args.format
    if args.out is None:
        write_report(report, fmt, sys.stdout)
    else:
        emit_report(report, fmt, args.out)
    if report.failures:
        log.warning("%d trial(s) failed", len(report.failures))
    return 0


def _make_scenario(args) -> int:
    model = args.model
    cfg = default_config(EXPERIMENT_COMMANDS[model] if model == "compare" else model)
    base = 0 if args.seed is None else args.seed
    scen_seed, corr_seed = trial_seeds(base, args.trial)
    scenario = generate_scenario(cfg.region, args.m, scen_seed)
    if cfg.additive is not None:
        add = cfg.additive if args.alpha is None else dataclasses.replace(cfg.additive, alpha=args.alpha)
        data = corrupt_additive_mixture(scenario, add.beta, add.sigma, add.a, add.b, corr_seed,
                                        alpha=add.alpha, mode=add.mode)
    else:
        changes = {"alpha": args.alpha, "k": args.k}
        spec = dataclasses.replace(cfg.corruption, **{k: v for k, v in changes.items() if v is not None})
        data = corrupt_multiplicative(scenario, spec, corr_seed)
    payload = {"scenario": scenario_to_dict(scenario), "corrupted": corrupted_to_dict(data)}
    _write_text(json.dumps(payload, sort_keys=True) + "\n", args.out)
    return 0


def _load_replay(path):
    with open(path) as fh:
        d = json.load(fh)
    return scenario_from_dict(d["scenario"]), corrupted_from_dict(d["corrupted"])


def _identify(args) -> int:
    scenario, data = _load_replay(args.scenario)
    truth = list(data.truth_corrupted_nodes)
    alpha = args.alpha if args.alpha is not None else len(truth)
    if args.method == "ours":
        anchors = scenario.anchors
        system = build_system(anchors)
        ident = identify_corrupted(anchors, assemble_rhs(system, data.F_tilde), alpha,
                                   system=system, R=annihilator(anchors, system))
    elif args.method == "naive":
        ident = naive_identify(data.F_tilde, alpha)
    else:
        ident = srpca_identify(data.F_tilde, alpha)
    out = {"method": args.method, "alpha": alpha, "indices": list(ident.indices)}
    if truth and len(truth) == alpha and data.model.get("kind") == "multiplicative":
        out["ia"] = identification_accuracy(ident.indices, truth)
    _write_text(json.dumps(out, sort_keys=True) + "\n", args.out)
    return 0


def _estimate(args) -> int:
    scenario, data = _load_replay(args.scenario)
    anchors = scenario.anchors
    nodes = args.nodes if args.nodes else list(data.truth_corrupted_nodes)
    if not nodes:
        raise LocalizationError("no target nodes to estimate")
    system = build_system(anchors)
    R = annihilator(anchors, system)
    M = assemble_rhs(system, data.F_tilde)
    ests = [estimate_position(anchors, M[:, i], system=system, R=R) for i in nodes]
    positions = np.array([e.position for e in ests])
    truth = scenario.targets[nodes]
    met = estimation_metrics(truth, positions, anchors, np.sqrt(data.F_clean), np.sqrt(data.F_tilde), nodes)
    out = {
        "nodes": list(nodes),
        "positions": positions.tolist(),
        "converged": [bool(e.converged) for e in ests],
        "metrics": dataclasses.asdict(met),
    }
    _write_text(json.dumps(out, sort_keys=True) + "\n", args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in EXPERIMENT_COMMANDS:
            return _run_experiment(args)
        if args.command == "scenario":
            return _make_scenario(args)
        if args.command == "identify":
            return _identify(args)
        return _estimate(args)
    except ExperimentAborted as exc:
        log.error("aborted: %s", exc)
        return 3
    except (LocalizationError, OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

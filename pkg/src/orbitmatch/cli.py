"""``orbitmatch`` command line: run one experiment from a YAML config and write its report.

Exit codes: 0 success or consistent, 1 a probe reported inconsistent,
2 usage or configuration error, 3 internal check failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import yaml

from . import __version__
from .banach import densities, estimate_bf, estimate_f, time_average, uniform_time_average
from .bounds import certify_pair
from .config import (ConfigError, build_index_set, build_points, build_schedule, build_system,
                     parse_config, thresholds)
from .ergotest import (INCONSISTENT, average_continuity_probe, equicontinuity_modulus, gap_probe,
                       measure_agreement_probe, physical_measure_probe, sample_points,
                       unique_ergodicity_probe)
from .observables import UnknownObservable
from .report import ReportRow, emit_report, render_document, render_table, write_text
from .spaces import CapacityError, SpaceMismatchError
from .verify import run_suites

log = logging.getLogger("orbitmatch")

COMMANDS = ("bf", "f", "avg", "density", "bound", "probe", "verify")
EXIT_OK, EXIT_INCONSISTENT, EXIT_USAGE, EXIT_CHECK = 0, 1, 2, 3

AVG_FIELDS = ("experiment_id", "system", "x_id", "observable", "L", "m_count", "mean", "low", "high",
              "spread", "cesaro")
DENSITY_FIELDS = ("experiment_id", "horizon", "upper", "lower", "upper_banach", "initial_cutoff",
                  "banach_cutoff")
BOUND_FIELDS = ("experiment_id", "system", "x_id", "y_id", "L", "tail_sup", "certified_bound",
                "dominated")

WINDOW_CONVENTION = ("window (m, n) covers the n - m iterates T^k for m <= k < n; "
                     "F rows use the initial windows [0, n)")


class UsageError(Exception):
    pass


def _load_raw(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    return doc


def apply_overrides(doc: dict, seed=None, threads=None, solver=None, max_length=None, horizon=None,
                    out=None, fmt=None) -> dict:
    """Fold command-line overrides into the raw config document."""
    doc = dict(doc)
    if seed is not None:
        doc["seed"] = seed
    if threads is not None:
        doc["threads"] = threads
    if solver is not None:
        doc["solver"] = solver
    if max_length is not None or horizon is not None:
        sched = dict(doc.get("schedule") or {})
        if horizon is not None:
            sched["horizon"] = horizon
        if max_length is not None:
            sched["max_length"] = max_length
            if sched.get("lengths"):
                sched["lengths"] = [L for L in sched["lengths"] if L <= max_length]
        doc["schedule"] = sched
    if horizon is not None and isinstance(doc.get("density"), dict):
        doc["density"] = {**doc["density"], "horizon": horizon}
    if out is not None or fmt is not None:
        output = dict(doc.get("output") or {})
        if out is not None:
            output["path"] = out
        if fmt is not None:
            output["format"] = fmt
        doc["output"] = output
    return doc


class Experiment:
    def __init__(self, cfg):
        self.cfg = cfg
        self.schedule = build_schedule(cfg)
        self.system = build_system(cfg.system, self.schedule.horizon)
        self.points = build_points(cfg, self.system)
        self.thresholds = thresholds(cfg)

    @property
    def eid(self) -> str:
        return self.cfg.experiment_id

    def meta(self, command: str) -> dict:
        return {"command": command,
                "experiment": self.cfg.model_dump(mode="json"),
                "system": self.system.describe(),
                "metric": self.system.metric,
                "schedule": self.schedule.as_dict(),
                "thresholds": self.thresholds,
                "solver": self.cfg.solver,
                "seed": self.cfg.seed,
                "window_convention": WINDOW_CONVENTION,
                "version": __version__}

    def pairs(self):
        if not self.cfg.pairs:
            raise ConfigError("pairs: this command needs at least one (x, y) pair")
        return [(x, y, self.points[x], self.points[y]) for x, y in self.cfg.pairs]


def _estimate_rows(exp: Experiment, x_id, y_id, est) -> list:
    return [ReportRow(exp.eid, exp.system.describe(), x_id, y_id, r.L, r.count, r.sup_cost, r.inf_cost,
                      r.tail_sup, r.tail_inf, r.solver_tag, r.gap_bound) for r in est.per_length]


def cmd_bf(exp: Experiment):
    rows = []
    for xi, yi, x, y in exp.pairs():
        est = estimate_bf(exp.system, x, y, exp.schedule, exp.cfg.solver, exp.cfg.threads)
        rows += _estimate_rows(exp, xi, yi, est)
    return "rows", rows, EXIT_OK


def cmd_f(exp: Experiment):
    rows = []
    for xi, yi, x, y in exp.pairs():
        est = estimate_f(exp.system, x, y, schedule=exp.schedule, policy=exp.cfg.solver)
        rows += _estimate_rows(exp, xi, yi, est)
    return "rows", rows, EXIT_OK


def cmd_avg(exp: Experiment):
    if not exp.cfg.observables:
        raise ConfigError("observables: avg needs at least one observable name")
    if not exp.points:
        raise ConfigError("points: avg needs at least one point")
    rows = []
    for name, p in exp.points.items():
        for f in exp.cfg.observables:
            try:
                ua = uniform_time_average(exp.system, p, f, exp.schedule)
            except UnknownObservable as exc:
                raise ConfigError(f"observables: {exc.args[0]}") from None
            for r in ua.per_length:
                rows.append({"experiment_id": exp.eid, "system": exp.system.describe(), "x_id": name,
                             "observable": f, "L": r.L, "m_count": r.count, "mean": r.mean,
                             "low": r.low, "high": r.high, "spread": r.spread,
                             "cesaro": time_average(exp.system, p, f, r.L)})
    rows.sort(key=lambda d: (d["experiment_id"], d["L"]))
    return ("table", AVG_FIELDS), rows, EXIT_OK


def cmd_density(exp: Experiment):
    if exp.cfg.density is None:
        raise ConfigError("density: the density command needs a 'density' section")
    F = build_index_set(exp.cfg.density, exp.cfg.seed)
    try:
        d = densities(F)
    except ValueError as exc:
        raise ConfigError(f"density.horizon: {exc}") from None
    row = {"experiment_id": exp.eid, "horizon": d.horizon, "upper": d.upper, "lower": d.lower,
           "upper_banach": d.upper_banach, "initial_cutoff": d.initial_cutoff,
           "banach_cutoff": d.banach_cutoff}
    return ("table", DENSITY_FIELDS), [row], EXIT_OK


def cmd_bound(exp: Experiment):
    if exp.cfg.bound is None:
        raise ConfigError("bound: the bound command needs a 'bound' section with eps")
    rows, certs = [], []
    for xi, yi, x, y in exp.pairs():
        try:
            cert = certify_pair(exp.system, x, y, exp.cfg.bound.eps, exp.schedule)
        except ValueError as exc:
            raise ConfigError(f"bound.eps: {exc}") from None
        est = estimate_bf(exp.system, x, y, exp.schedule, exp.cfg.solver, exp.cfg.threads)
        certs.append({"x_id": xi, "y_id": yi, "certified_at_horizon": exp.schedule.horizon,
                      **cert.as_dict()})
        for r in est.per_length:
            rows.append({"experiment_id": exp.eid, "system": exp.system.describe(), "x_id": xi,
                         "y_id": yi, "L": r.L, "tail_sup": r.tail_sup, "certified_bound": cert.bound,
                         "dominated": r.tail_sup <= cert.bound})
    rows.sort(key=lambda d: (d["experiment_id"], d["L"]))
    return ("table", BOUND_FIELDS, {"certificates": certs}), rows, EXIT_OK


def _probe_points(exp: Experiment):
    probe = exp.cfg.probe
    pts = [exp.points[n] for n in probe.points]
    ids = list(probe.points)
    if probe.random_points:
        pts += sample_points(exp.system, probe.random_points, exp.cfg.seed)
        ids += [f"sample{i}" for i in range(probe.random_points)]
    return ids, pts


def cmd_probe(exp: Experiment):
    probe = exp.cfg.probe
    if probe is None:
        raise ConfigError("probe: the probe command needs a 'probe' section")
    ids, pts = _probe_points(exp)
    sys_, sched, th, pol = exp.system, exp.schedule, exp.thresholds, exp.cfg.solver
    kind = probe.kind
    if kind == "measure_agreement" and len(pts) != 2:
        raise ConfigError(f"probe.points: measure_agreement needs exactly two points, got {len(pts)}")
    if kind in ("unique_ergodicity",) and len(pts) < 2:
        raise ConfigError(f"probe.points: {kind} needs at least two points")
    if kind in ("modulus", "average_continuity") and not probe.deltas:
        raise ConfigError(f"probe.deltas: {kind} needs a decreasing delta ladder")
    try:
        if kind == "unique_ergodicity":
            v = unique_ergodicity_probe(sys_, pts, sched, th, pol)
        elif kind == "measure_agreement":
            v = measure_agreement_probe(sys_, pts[0], pts[1], sched, th, pol)
        elif kind == "gap":
            v = gap_probe(sys_, pts, sched, th, pol)
        elif kind == "physical":
            v = physical_measure_probe(sys_, pts, sched, th, pol)
        elif kind == "modulus":
            v = equicontinuity_modulus(sys_, pts, probe.deltas, sched, exp.cfg.seed,
                                       policy=pol).verdict(th)
        else:
            if probe.observable is None:
                raise ConfigError("probe.observable: average_continuity needs an observable")
            v = average_continuity_probe(sys_, probe.observable, pts, probe.deltas, sched,
                                         exp.cfg.seed, th, probe.check_cesaro)
    except UnknownObservable as exc:
        raise ConfigError(f"probe.observable: {exc.args[0]}") from None
    doc = {"experiment_id": exp.eid, "point_ids": ids, "verdict": v.as_dict()}
    return "document", doc, EXIT_INCONSISTENT if v.status == INCONSISTENT else EXIT_OK


def cmd_verify(exp: Experiment):
    results = run_suites(exp.cfg.seed or 0)
    for r in results:
        log.info("verify %-24s %s (%d cases, %.2fs)", r.name, "ok" if r.ok else "FAIL", r.cases, r.seconds)
    suites = [{k: v for k, v in r.as_dict().items() if k != "seconds"} for r in results]
    passed = all(r.ok for r in results)
    doc = {"experiment_id": exp.eid, "passed": passed, "suites": suites}
    return "document", doc, EXIT_OK if passed else EXIT_CHECK


HANDLERS = {"bf": cmd_bf, "f": cmd_f, "avg": cmd_avg, "density": cmd_density, "bound": cmd_bound,
            "probe": cmd_probe, "verify": cmd_verify}


def execute(command: str, doc: dict, stdout=None) -> int:
    """Run ``command`` on an already loaded (and overridden) config document."""
    if command not in HANDLERS:
        raise UsageError(f"unknown subcommand {command!r}; choose from {', '.join(COMMANDS)}")
    if command == "verify":
        doc = {"experiment_id": "verify", "system": {"kind": "rotation", "alpha": "golden"}, **doc}
    cfg = parse_config(doc)
    exp = Experiment(cfg)
    kind, payload, code = HANDLERS[command](exp)
    meta = exp.meta(command)
    path, fmt = cfg.output.path, cfg.output.format
    if kind == "rows":
        text = emit_report(payload, fmt, path, meta)
    elif kind == "document":
        # verdicts and suite summaries are nested, so they are always JSON
        text = render_document({**payload, "config": meta})
        if path:
            write_text(path, text)
    else:
        columns = kind[1]
        extra = kind[2] if len(kind) > 2 else {}
        full_meta = {**meta, **extra}
        text = render_table(payload, columns, fmt, full_meta)
        if path:
            write_text(path, text)
            if fmt == "csv":
                write_text(f"{path}.meta.json", render_document(full_meta))
    if not path:
        (stdout or sys.stdout).write(text)
    return code


def run(config_path, subcommand: str, **overrides) -> int:
    """Programmatic entry point; returns the process exit code."""
    try:
        doc = apply_overrides(_load_raw(config_path), **overrides)
        return execute(subcommand, doc)
    except (ConfigError, UsageError) as exc:
        print(f"orbitmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, SpaceMismatchError, OSError, ValueError) as exc:
        print(f"orbitmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbitmatch",
                                description="Orbit-matching pseudometric estimates and probes.")
    p.add_argument("subcommand", choices=COMMANDS)
    p.add_argument("--config", help="YAML experiment config (optional for verify)")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), dest="fmt")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--solver", choices=("exact", "fast", "auto"))
    p.add_argument("--max-length", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.config is None and args.subcommand != "verify":
        print("orbitmatch: error: --config is required", file=sys.stderr)
        return EXIT_USAGE
    if args.threads is not None and args.threads < 1:
        print("orbitmatch: error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    return run(args.config, args.subcommand, seed=args.seed, threads=args.threads, solver=args.solver,
               max_length=args.max_length, horizon=args.horizon, out=args.out, fmt=args.fmt)


if __name__ == "__main__":
    sys.exit(main())

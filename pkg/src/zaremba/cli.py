"""Command-line entry point: ``zaremba <command> --config run.toml``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import airy, waves
from .config import ConfigError, RunConfig
from .flow import FlowError, evolve, evolve_on_gamma, trajectory_records
from .geometry import GeometryError, MetricError
from .mgcc import check_mgcc, seed_lattice
from .symbol import classify_boundary

log = logging.getLogger("zaremba")

EXIT_CONFIG = 3
EXIT_RUNTIME = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _setup_logging():
    level = os.environ.get("ZR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _write_jsonl(path: Path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rng_seed(args, cfg: RunConfig) -> int:
    return int(args.seed if args.seed is not None else cfg.cfg["seeds"]["seed"])


def _seeds(args, cfg: RunConfig, domain, metric):
    points = cfg.points()
    if points:
        return points
    s = cfg.cfg["seeds"]
    return seed_lattice(domain, metric, s["resolution"], s["n_dir"], _rng_seed(args, cfg), s["boundary"], s["n_R"], s["gamma"])


def cmd_trace(args, cfg: RunConfig) -> int:
    domain, metric = cfg.domain(), cfg.metric()
    opts = cfg.flow_options(args.gamma_policy)
    T = cfg.cfg["flow"]["horizon"] if args.s is None else args.s
    recs = []
    for i, rho in enumerate(_seeds(args, cfg, domain, metric)):
        run = evolve_on_gamma if rho.kind == "interface" else evolve
        recs.extend(trajectory_records(run(domain, metric, rho, T, opts), i))
    out = _out_dir(args, cfg)
    _write_jsonl(out / "trajectories.jsonl", recs)
    print(f"wrote {out / 'trajectories.jsonl'}")
    return 0


def cmd_classify(args, cfg: RunConfig) -> int:
    domain, metric = cfg.domain(), cfg.metric()
    f = cfg.cfg["flow"]
    recs = []
    for i, rho in enumerate(cfg.points()):
        if rho.kind != "boundary":
            continue
        c = classify_boundary(domain, metric, rho.x, rho.xi, f.get("eps_glance"), f["s_probe"], f["k_max"])
        recs.append({"index": i, "x": [float(v) for v in rho.x], "xi": [float(v) for v in rho.xi], **c.as_dict()})
        print(f"{i}: {c.tag}" + (f" k={c.k} alpha={c.alpha:.6g}" if c.k else ""))
    out = _out_dir(args, cfg)
    _write_jsonl(out / "classify.jsonl", recs)
    return 0


def cmd_mgcc(args, cfg: RunConfig) -> int:
    domain, metric, damping = cfg.domain(), cfg.metric(), cfg.damping()
    f = cfg.cfg["flow"]
    seeds = _seeds(args, cfg, domain, metric)
    report = check_mgcc(domain, metric, damping, f["horizon"], seeds, f["a_min"], cfg.flow_options(args.gamma_policy), args.threads)
    out = _out_dir(args, cfg)
    summary = report.summary()
    summary["rng_seed"] = _rng_seed(args, cfg)
    summary["exit_code"] = report.exit_code
    with open(out / "mgcc_report.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_jsonl(out / "mgcc_seeds.jsonl", [v.as_dict() for v in report.per_seed])
    print(json.dumps(summary["counts"], sort_keys=True))
    return report.exit_code


def _operator(cfg: RunConfig):
    return waves.assemble(cfg.domain(), cfg.metric(), cfg.damping(), cfg.cfg["solver"]["resolution"])


def cmd_evolve(args, cfg: RunConfig) -> int:
    op = _operator(cfg)
    s = cfg.cfg["solver"]
    u0, u1 = waves.default_initial_state(op)
    tr = waves.evolve_wave(op, u0, u1, s["T"], s["dt"])
    out = _out_dir(args, cfg)
    _write_csv(out / "energy.csv", ["t", "E"], zip(tr.t, tr.E))
    try:
        _, c = waves.fit_decay(tr)
        print(f"decay rate c = {c:.6g}")
    except (waves.WaveError, ValueError) as exc:
        print(f"no decay fit: {exc}")
    return 0


def cmd_resolvent(args, cfg: RunConfig) -> int:
    op = _operator(cfg)
    sc = cfg.cfg["scan"]
    n = int(round((sc["mu_max"] - sc["mu_min"]) / sc["mu_step"]))
    mus = sc["mu_min"] + sc["mu_step"] * np.arange(n + 1)
    scan = waves.resolvent_scan(op, mus, sc["method"], args.threads)
    out = _out_dir(args, cfg)
    _write_csv(out / "resolvent.csv", ["mu", "norm"], zip(scan.mu, scan.norms))
    print(f"spectral abscissa {scan.spectral_abscissa:.6g}")
    return 0


def cmd_spectrum(args, cfg: RunConfig) -> int:
    op = _operator(cfg)
    ev = waves.spectrum(op, k=cfg.cfg["solver"]["modes"])
    out = _out_dir(args, cfg)
    _write_csv(out / "spectrum.csv", ["re", "im"], zip(ev.real, ev.imag))
    print(f"{ev.size} eigenvalues, spectral abscissa {waves.spectral_abscissa(ev):.6g}")
    return 0


def cmd_airy_verify(args, cfg) -> int:
    rows = airy.verify()
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "airy_verify.json", "w", encoding="utf-8") as fh:
        json.dump({"C0": airy.C0, "properties": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in rows:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['property']}: worst {r['worst']:.3g} (threshold {r['threshold']:.3g})")
    return 0 if all(r["pass"] for r in rows) else 1


COMMANDS = {
    "trace": cmd_trace,
    "classify": cmd_classify,
    "mgcc": cmd_mgcc,
    "evolve": cmd_evolve,
    "resolvent": cmd_resolvent,
    "spectrum": cmd_spectrum,
    "airy-verify": cmd_airy_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zaremba", description="Generalized rays, control checks and damped waves on mixed-boundary domains.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "airy-verify", help="TOML run configuration")
        sp.add_argument("--out", help="output directory (default: output.dir)")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None, help="lattice RNG seed (overrides seeds.seed)")
        sp.add_argument("--gamma-policy", choices=("terminate", "continue-hyperbolic"), default=None)
        if name == "trace":
            sp.add_argument("--s", type=float, default=None, help="signed flow time (default: flow.horizon)")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config) if args.config else None
        if cfg is not None:
            cfg.domain()
            cfg.metric()
            cfg.damping()
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg)
    except (waves.WaveError, FlowError, GeometryError, MetricError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"{type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

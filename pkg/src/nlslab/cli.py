"""``nlslab`` command line.

Exit codes: 0 success or matched case, 2 configuration or precondition error,
3 no verdict or failed search, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load
from .criteria import UnsupportedRegime, WindowError, check_halfline, check_line
from .field import AnalyticProfile, SampledField, UnderResolvedError
from .functionals import assemble, clean
from .scaling import PreconditionError, SearchFailed, synthesize

EXIT_OK, EXIT_CONFIG, EXIT_NOVERDICT, EXIT_NUMERIC = 0, 2, 3, 4


def _dumps(obj) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(obj, out=None):
    text = _dumps(obj)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    sys.stdout.write(text)


def _threads() -> int:
    raw = os.environ.get("NLSLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _verdict(cfg: RunConfig, u0):
    co, w = cfg.coefficient(), cfg.weight()
    bp = assemble(u0, w, co, cfg.t0, cfg.T, cfg.problem, cfg.r)
    if cfg.problem == "line":
        return bp, check_line(bp, co, cfg.t0, cfg.T)
    return bp, check_halfline(bp, co, cfg.t0, cfg.T, cfg.r)


# --------------------------------------------------------------------------
# single-entry runners; each returns (exit code, JSON-ready payload)


def run_check(cfg: RunConfig):
    try:
        bp, v = _verdict(cfg, cfg.datum())
    except (WindowError, UnsupportedRegime, ValueError) as exc:
        return EXIT_CONFIG, {"error": str(exc)}
    payload = {"parameters": bp.to_dict(), "verdict": v.to_dict()}
    return (EXIT_OK if v.matched else EXIT_NOVERDICT), payload


def _sample(cfg: RunConfig, u0):
    if isinstance(u0, SampledField):
        return u0
    c = cfg.controls()
    return SampledField.from_profile(u0, c.n, c.L)


def run_simulate(cfg: RunConfig, out_dir: Path):
    from .solver_halfline import run_halfline
    from .solver_line import run

    try:
        u0 = _sample(cfg, cfg.datum())
    except UnderResolvedError as exc:
        return EXIT_CONFIG, {"error": "under-resolved datum", "detail": str(exc)}
    co, c = cfg.coefficient(), cfg.controls()
    try:
        if cfg.problem == "line":
            rec = run(u0, co, cfg.t0, cfg.T, c, cfg.weight())
        else:
            rec = run_halfline(u0, co, cfg.t0, cfg.T, cfg.r, c, cfg.weight())
    except ValueError as exc:
        return EXIT_CONFIG, {"error": str(exc)}
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_name = cfg.data["output"]["csv"]
    rec.to_csv(out_dir / csv_name)
    summary = rec.summary()
    summary["parameters"] = rec.params.to_dict() if rec.params else None
    summary["monitors_csv"] = csv_name
    summary["meta"] = rec.meta
    (out_dir / cfg.data["output"]["json"]).write_text(_dumps(summary))
    code = EXIT_NUMERIC if rec.detection == "step_failure" else EXIT_OK
    return code, summary


def run_synthesize(cfg: RunConfig):
    seed = cfg.datum()
    if not isinstance(seed, AnalyticProfile):
        return EXIT_CONFIG, {"error": "synthesize needs a registry profile, not a sampled file"}
    y = cfg.data["synthesize"]
    try:
        res = synthesize(seed, y["target"], cfg.problem, cfg.coefficient(), cfg.t0, cfg.T,
                         cfg.weight(), cfg.r, rho_min=y["rho_min"])
    except PreconditionError as exc:
        return EXIT_CONFIG, {"error": str(exc)}
    except SearchFailed as exc:
        return EXIT_NOVERDICT, {"error": str(exc), "trace": exc.trace}
    except (WindowError, UnsupportedRegime) as exc:
        return EXIT_CONFIG, {"error": str(exc)}
    return EXIT_OK, {
        "mu": res.params.mu, "rho": res.params.rho, "profile": res.profile.to_dict(),
        "parameters": res.blowup.to_dict(), "verdict": res.verdict.to_dict(), "trace": res.trace,
    }


def _run_entries(cfg: RunConfig, job):
    """Run ``job(config, index)`` for the config itself or for each sweep entry."""
    entries = cfg.data["sweep"]
    if not entries:
        return job(cfg, None)
    resolved = []
    for e in entries:
        try:
            resolved.append(cfg.with_overrides(e))
        except ConfigError as exc:
            return EXIT_CONFIG, {"error": str(exc)}
    with ThreadPoolExecutor(max_workers=min(_threads(), len(resolved))) as pool:
        results = list(pool.map(lambda a: job(*a), [(c, i) for i, c in enumerate(resolved)]))
    code = max(r[0] for r in results)
    return code, {"entries": [{"index": i, "overrides": entries[i], "exit_code": r[0], "result": r[1]}
                              for i, r in enumerate(results)]}


# --------------------------------------------------------------------------
# commands


def cmd_check(args):
    cfg = load(args.config)
    code, payload = _run_entries(cfg, lambda c, i: run_check(c))
    _emit(payload, args.out)
    return code


def cmd_simulate(args):
    cfg = load(args.config)
    base = Path(args.out) if args.out else cfg.output_dir()

    def job(c, i):
        return run_simulate(c, base if i is None else base / f"entry-{i:03d}")

    code, payload = _run_entries(cfg, job)
    _emit(payload)
    return code


def cmd_synthesize(args):
    cfg = load(args.config)
    code, payload = _run_entries(cfg, lambda c, i: run_synthesize(c))
    _emit(payload, args.out)
    return code


def cmd_repro(args):
    from .section5 import ExampleConfig, format_table, plot_data, reproduce_report, to_json

    ex = ExampleConfig(rho=args.rho, mollifier_interpretation=args.mollifier)
    table = reproduce_report(ex)
    text = format_table(table) + "\n"
    js = to_json(table) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "section5.json").write_text(js)
        (out / "section5.txt").write_text(text)
        plot_data(out / "plots", ex)
    sys.stdout.write(js if args.json else text)
    return EXIT_OK


def cmd_weights(args):
    from .weights import make_weight

    w = make_weight(args.kind, args.mollifier)
    report = {"kind": w.kind, "knots": list(w.knots), "support": list(w.support),
              "psi_plateau": w.psi_plateau, "sup_norms": asdict(w.sup_norms())}
    if hasattr(w, "continuity_report"):
        report["continuity"] = w.continuity_report()
        report["mollifier"] = args.mollifier
    if args.csv:
        hi = 2.5 if args.kind == "line" else 20.0
        x = np.linspace(-hi if args.kind == "line" else 0.0, hi, args.samples)
        cols = [x] + [w.phi(x, k) for k in range(4)] + [w.psi(x)]
        with open(args.csv, "w") as fh:
            fh.write("x,phi,phi1,phi2,phi3,psi\n")
            for row in zip(*cols):
                fh.write(",".join(f"{float(v):.17g}" for v in row) + "\n")
    _emit(report)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nlslab", description="blow-up criteria and simulations for "
                                "1-D NLS with an oscillating nonlinear coefficient")
    p.add_argument("--version", action="version", version=f"nlslab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", help="assemble the blow-up parameters and evaluate the criteria")
    s.add_argument("config")
    s.add_argument("-o", "--out", help="also write the JSON here")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("simulate", help="run the solver and write monitor CSV + summary JSON")
    s.add_argument("config")
    s.add_argument("-o", "--out", help="output directory (overrides output.dir)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("synthesize", help="search the scaling family for a certified datum")
    s.add_argument("config")
    s.add_argument("-o", "--out", help="also write the JSON here")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("repro-section5", help="audit the worked infinite-momentum example")
    s.add_argument("--mollifier", choices=("rescaled", "literal"), default="rescaled")
    s.add_argument("--rho", type=float, default=1e-10)
    s.add_argument("--out", help="directory for JSON, text table and plot CSVs")
    s.add_argument("--json", action="store_true", help="print JSON instead of the text table")
    s.set_defaults(func=cmd_repro)

    s = sub.add_parser("weights-inspect", help="sup norms, knots and branch jumps of a weight")
    s.add_argument("--kind", choices=("line", "halfline"), default="line")
    s.add_argument("--mollifier", choices=("rescaled", "literal"), default="rescaled")
    s.add_argument("--csv", help="write sampled phi, derivatives and Psi here")
    s.add_argument("--samples", type=int, default=2001)
    s.set_defaults(func=cmd_weights)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"nlslab: config error: {exc}\n")
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"nlslab: numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

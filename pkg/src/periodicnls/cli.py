"""Command-line interface.

Subcommands: classify, minimize, sweep, gn-estimate, trial, normalize,
soliton.  Exit codes: 0 success, 2 validation error, 3 inconclusive result.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import corpus
from .gn import estimate_cg
from .io import RunReport, SpecFileError, parse_spec, spec_to_dict, write_csv
from .minimizer import InconclusiveRun, MinimizeOptions, minimize, sweep
from .periodic import PeriodicSpec, SpecError, normalize_pasting, validate_spec
from .solitons import soliton_params
from .topology import InconclusiveTopology, classify
from .trials import SignpostParams, signpost_trial, subcritical_trial

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INCONCLUSIVE = 3


def _load_spec(path: str) -> PeriodicSpec:
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        if name not in corpus.BUILTIN:
            raise SpecFileError(
                f"unknown builtin {name!r}; available: {', '.join(sorted(corpus.BUILTIN))}"
            )
        return corpus.BUILTIN[name]()
    return parse_spec(path)


def _mu_grid(text: str) -> List[float]:
    try:
        a, b, steps = text.split(":")
        a_f, b_f, n = float(a), float(b), int(steps)
        if n < 1 or b_f < a_f:
            raise ValueError
    except ValueError:
        raise SpecFileError("--mu-grid must look like start:stop:steps") from None
    if n == 1:
        return [a_f]
    return [a_f + (b_f - a_f) * k / (n - 1) for k in range(n)]


def _options(args) -> dict:
    return {
        k: v
        for k, v in vars(args).items()
        if k not in ("fn", "command") and isinstance(v, (str, int, float, bool, type(None)))
    }


def _out_dir(args) -> Optional[Path]:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, command: str, options: dict, results: dict, started: float, code: int) -> int:
    out = _out_dir(args)
    report = RunReport(
        command=command,
        input_path=getattr(args, "spec", None),
        options=options,
        results=results,
        started=started,
        finished=time.time(),
    )
    text = json.dumps(report.to_dict()["results"], indent=2, sort_keys=True)
    print(text)
    if out is not None:
        report.write(out / "run_report.json")
    return code


def _dump_profile(u, out: Path, name: str = "profile.csv") -> None:
    write_csv(out / name, ["edge_id", "cell", "x", "value"], u.dump_rows())


def cmd_classify(args) -> int:
    started = time.time()
    s = _load_spec(args.spec)
    rep = validate_spec(s)
    if not rep.ok:
        print("\n".join("error: " + p for p in rep.problems), file=sys.stderr)
        return EXIT_VALIDATION
    try:
        t = classify(s)
    except InconclusiveTopology as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    results = {
        "kind": t.kind,
        "witness_edge": t.witness_edge,
        "cut_edges": sorted(t.cut_edges),
        "witness_path_length": rep.witness_path_length,
    }
    return _finish(args, "classify", {"spec": args.spec}, results, started, EXIT_OK)


def _minimize_opts(args) -> MinimizeOptions:
    return MinimizeOptions(
        p=args.p,
        mu=args.mu if args.mu is not None else 1.0,
        mesh_h=args.mesh_h,
        n_cells=args.cells,
        starts=args.starts,
        seed=args.seed,
    )


def cmd_minimize(args) -> int:
    started = time.time()
    s = _load_spec(args.spec)
    rep = validate_spec(s)
    if not rep.ok:
        print("\n".join("error: " + p for p in rep.problems), file=sys.stderr)
        return EXIT_VALIDATION
    if args.mu is None:
        print("error: --mu is required for minimize", file=sys.stderr)
        return EXIT_VALIDATION
    opts = _minimize_opts(args)
    try:
        r = minimize(s, opts)
    except InconclusiveRun as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    results = {
        "status": r.status,
        "energy": r.energy,
        "mass": r.mass,
        "kinetic": r.kinetic,
        "sup": r.sup,
        "lambda": r.lam,
        "iterations": r.iterations,
    }
    out = _out_dir(args)
    if out is not None and args.dump_profile and r.u is not None:
        _dump_profile(r.u, out)
    return _finish(args, "minimize", _options(args), results, started, EXIT_OK)


def cmd_sweep(args) -> int:
    started = time.time()
    s = _load_spec(args.spec)
    rep = validate_spec(s)
    if not rep.ok:
        print("\n".join("error: " + p for p in rep.problems), file=sys.stderr)
        return EXIT_VALIDATION
    mus = _mu_grid(args.mu_grid)
    opts = _minimize_opts(args)
    rows = sweep(s, mus, opts)
    out = _out_dir(args)
    table = [
        (r.mu, r.status, r.energy, r.kinetic, r.sup, r.lam, r.iterations, r.n_cells, r.mesh_h)
        for r in rows
    ]
    if out is not None:
        write_csv(
            out / "results.csv",
            ["mu", "status", "energy", "kinetic", "sup", "lambda", "iters", "N", "h"],
            table,
        )
    results = {"rows": [{"mu": r.mu, "status": r.status, "energy": r.energy} for r in rows]}
    code = EXIT_INCONCLUSIVE if any(r.status == "inconclusive" for r in rows) else EXIT_OK
    return _finish(args, "sweep", _options(args), results, started, code)


def cmd_gn_estimate(args) -> int:
    started = time.time()
    s = _load_spec(args.spec)
    rep = validate_spec(s)
    if not rep.ok:
        print("\n".join("error: " + p for p in rep.problems), file=sys.stderr)
        return EXIT_VALIDATION
    r = estimate_cg(s, mesh_h=args.mesh_h, n_cells=args.cells, starts=args.starts, seed=args.seed)
    results = {
        "cg_estimate": r.cg_estimate,
        "mu_g_estimate": r.mu_g_estimate,
        "base_cg": r.base_cg,
        "refined_cg": r.refined_cg,
    }
    out = _out_dir(args)
    if out is not None and args.dump_profile and r.maximizer is not None:
        _dump_profile(r.maximizer, out)
    return _finish(args, "gn-estimate", _options(args), results, started, EXIT_OK)


def cmd_trial(args) -> int:
    started = time.time()
    s = _load_spec(args.spec)
    rep = validate_spec(s)
    if not rep.ok:
        print("\n".join("error: " + p for p in rep.problems), file=sys.stderr)
        return EXIT_VALIDATION
    if args.p >= 6.0:
        if s.name != "signpost":
            print("error: the p=6 trial is defined for the signpost family", file=sys.stderr)
            return EXIT_VALIDATION
        t = signpost_trial(SignpostParams(), lam=args.lam)
        results = {
            "energy": t.energy,
            "energy_upper_bound": t.energy_upper_bound,
            "mass_excess_r": t.r,
            "segment_integral_quadrature": t.segment_integral_quadrature,
            "segment_integral_printed": t.segment_integral_printed,
        }
        u = t.u
    else:
        if args.mu is None:
            print("error: --mu is required for the subcritical trial", file=sys.stderr)
            return EXIT_VALIDATION
        t = subcritical_trial(s, args.p, args.mu, mesh_h=args.mesh_h)
        results = {
            "energy": t.energy,
            "mu1": t.mu1,
            "mass": t.mass,
            "formula_mass": t.formula_mass,
            "formula_energy": t.formula_energy,
            "n_cells": t.trunc.n_cells,
        }
        u = t.u
    out = _out_dir(args)
    if out is not None and args.dump_profile:
        _dump_profile(u, out)
    return _finish(args, "trial", _options(args), results, started, EXIT_OK)


def cmd_normalize(args) -> int:
    started = time.time()
    s = _load_spec(args.spec)
    try:
        r = normalize_pasting(s)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    results = {"kind": r.kind, "cell_multiplier": r.cell_multiplier}
    if r.kind == "star_like":
        results["witness_cycle"] = list(r.witness_cycle)
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_OK
        if r.spec is not None:
            results["normalized"] = spec_to_dict(r.spec)
            out = _out_dir(args)
            if out is not None:
                (out / "normalized.json").write_text(
                    json.dumps(spec_to_dict(r.spec), indent=2, sort_keys=True) + "\n"
                )
    return _finish(args, "normalize", {"spec": args.spec}, results, started, code)


def cmd_soliton(args) -> int:
    started = time.time()
    if not (2.0 < args.p < 6.0):
        print("error: --p must satisfy 2 < p < 6", file=sys.stderr)
        return EXIT_VALIDATION
    sp = soliton_params(args.p)
    results = {
        "p": sp.p,
        "alpha": sp.alpha,
        "beta": sp.beta,
        "width_a": sp.a,
        "amplitude": sp.amplitude,
        "lambda": sp.lam,
    }
    return _finish(args, "soliton", {"p": args.p}, results, started, EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="periodicnls",
        description="NLS ground states on Z-periodic metric graphs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("spec", help="spec file path, or builtin:<name>")
        sp.add_argument("--p", type=float, default=4.0)
        sp.add_argument("--mu", type=float, default=None)
        sp.add_argument("--mesh-h", dest="mesh_h", type=float, default=0.02)
        sp.add_argument("--cells", type=int, default=8)
        sp.add_argument("--starts", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.add_argument("--dump-profile", action="store_true")

    sp = sub.add_parser("classify", help="topological trichotomy of the glued graph")
    sp.add_argument("spec")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("minimize", help="mass-constrained ground-state search")
    common(sp)
    sp.set_defaults(fn=cmd_minimize)

    sp = sub.add_parser("sweep", help="minimize over a grid of masses")
    common(sp)
    sp.add_argument("--mu-grid", dest="mu_grid", required=True, help="start:stop:steps")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("gn-estimate", help="estimate the critical GN constant")
    common(sp)
    sp.set_defaults(fn=cmd_gn_estimate)

    sp = sub.add_parser("trial", help="explicit competitor constructions")
    common(sp)
    sp.add_argument("--lam", type=float, default=10.0)
    sp.set_defaults(fn=cmd_trial)

    sp = sub.add_parser("normalize", help="rewrite a non-normal pasting rule")
    sp.add_argument("spec")
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_normalize)

    sp = sub.add_parser("soliton", help="line soliton parameters for 2 < p < 6")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_soliton)

    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SpecFileError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

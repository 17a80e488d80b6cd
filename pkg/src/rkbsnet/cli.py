"""Command-line interface: ``rkbsnet {solve,admissible,supnorm,reproduce-paper-example}``.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 ill-conditioned Gram matrix.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config, load_dataset, public_config
from .kernel import KernelContext
from .network import Architecture, pack
from .report import admissible_report, dumps, solution_report
from .signs import EnumerationTooLarge, enumerate_admissible
from .solver import Dataset, IllConditionedError, NoAnchorsError, SolverOptions, solve_vector_valued
from .supnorm import Combination, SearchConfig, estimate_sup

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_ILL_CONDITIONED = 4

logger = logging.getLogger("rkbsnet")


def _color(text, code, stream):
    if os.environ.get("NO_COLOR") or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[{code}m{text}\033[0m"


def _apply_overrides(cfg, args):
    search = cfg["search"]
    for name in ("seed", "starts", "iters", "tol"):
        value = getattr(args, name, None)
        if value is not None:
            search[name] = value
    if getattr(args, "lambda0", None) is not None:
        if not args.lambda0 > 0:
            raise ConfigError("--lambda0 must be positive")
        cfg["regularization"]["lambda0"] = args.lambda0
    if getattr(args, "include_uncertified_signs", False):
        cfg["regularization"]["include_uncertified_signs"] = True
    if search["seed"] < 0 or search["starts"] < 1 or search["iters"] < 1 or not search["tol"] > 0:
        raise ConfigError("search settings must satisfy seed >= 0, starts >= 1, iters >= 1, tol > 0")
    return cfg


def _prepare(args):
    cfg = _apply_overrides(load_config(args.config), args)
    X, Y = load_dataset(cfg)
    try:
        data = Dataset(X, Y)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    a = cfg["architecture"]
    try:
        arch = Architecture(tuple(a["layers"]), a["activation"], a["output_activation_applied"])
        ctx = KernelContext(arch, cfg["decay_exponent"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    s = cfg["search"]
    search = SearchConfig(seed=s["seed"], starts=s["starts"], iters=s["iters"], tolerance=s["tol"],
                          n_jobs=args.jobs)
    return cfg, data, ctx, search


def _options(cfg, jobs):
    r, so = cfg["regularization"], cfg["solver"]
    return SolverOptions(lambda0=r["lambda0"], include_uncertified_signs=r["include_uncertified_signs"],
                         scaled_witnesses=so["scaled_witnesses"], anchor_fallback=so["anchor_fallback"], reanchor=so["reanchor"],
                         enumeration_cap=so["enumeration_cap"], n_jobs=jobs)


def _provenance(seed, started):
    return {"artifact_version": __version__, "seed": int(seed),
            "wall_clock_seconds": round(time.perf_counter() - started, 6)}


def _write(text, out):
    if out is None:
        return
    Path(out).write_text(text, encoding="utf-8")


def _fmt(v):
    return "inf" if v is None or not np.isfinite(v) else f"{v:.6g}"


def print_admissible_table(table, stream=sys.stdout):
    colors = {"CertifiedAdmissible": "32", "CertifiedInadmissible": "31", "Uncertified": "33"}
    print(f"{'sign vector':<16} {'verdict':<22} {'certificate / witness':<40} bracket", file=stream)
    for s, v in table:
        if v.witness is not None:
            detail = "witness " + "[" + ", ".join(f"{w:.4g}" for w in pack(v.witness)) + "]"
        else:
            detail = v.certificate or ""
        est = v.estimate
        bracket = f"[{_fmt(est.lower)}, {_fmt(est.upper)}]" if est is not None else (
            _fmt(v.value) if v.value is not None else "")
        verdict = _color(f"{v.kind:<22}", colors[v.kind], stream)
        print(f"{str(tuple(s)):<16} {verdict} {detail[:40]:<40} {bracket}", file=stream)


def cmd_solve(args):
    started = time.perf_counter()
    cfg, data, ctx, search = _prepare(args)
    vsol = solve_vector_valued(data.X, data.Y, ctx, search, _options(cfg, args.jobs))
    report = solution_report(public_config(cfg), data.X, data.Y, vsol,
                             _provenance(search.seed, started))
    text = dumps(report)
    out = args.out or cfg.get("output")
    if out and not Path(out).is_absolute() and args.out is None:
        out = str(Path(cfg["_base_dir"]) / out)
    _write(text, out)
    for comp in vsol.components:
        lo, hi = comp.mni.norm_lower, comp.mni.norm_upper
        line = f"component {comp.component}: beta={np.round(comp.beta, 12).tolist()} norm in [{_fmt(lo)}, {_fmt(hi)}] {comp.mni.status}"
        if comp.selection is not None:
            line += f"; R interval [{_fmt(comp.r_interval[0])}, {_fmt(comp.r_interval[1])}] -> {comp.selection.decision}"
        print(line)
        for i, reason in comp.excluded:
            print(f"  excluded point {i}: {reason}")
    if out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_admissible(args):
    started = time.perf_counter()
    cfg, data, ctx, search = _prepare(args)
    sctx = ctx.scalar_slice()
    so = cfg["solver"]
    table = enumerate_admissible(data.X, sctx, search, 0, so["scaled_witnesses"], so["enumeration_cap"], args.jobs)
    print_admissible_table(table)
    n_ok = sum(v.admissible for _, v in table)
    print(f"{n_ok} certified admissible of {len(table)}")
    if args.out:
        _write(dumps(admissible_report(public_config(cfg), data.X, data.Y, table, 0,
                                       _provenance(search.seed, started))), args.out)
    return EXIT_OK


def _parse_combination(spec, m):
    terms = []
    for part in (p.strip() for p in spec.split(",") if p.strip()):
        try:
            coef, idx = part.split(":")
            coef, idx = float(coef), int(idx)
        except ValueError as exc:
            raise ConfigError(f"combination term {part!r} is not COEF:INDEX") from exc
        if not 0 <= idx < m:
            raise ConfigError(f"combination index {idx} outside dataset of {m} points")
        terms.append((coef, idx))
    return terms


def cmd_supnorm(args):
    cfg, data, ctx, search = _prepare(args)
    sctx = ctx.scalar_slice()
    terms = _parse_combination(args.combination, data.X.shape[0])
    if not terms:
        terms = [(0.0, 0)]  # the empty combination is the zero function
    coef = np.array([c for c, _ in terms])
    est = estimate_sup(Combination.from_arrays(coef, data.X[[i for _, i in terms]], sctx, 0), search)
    witness = "none" if est.witness is None else "[" + ", ".join(f"{w:.10g}" for w in pack(est.witness)) + "]"
    print(f"lower   {est.lower:.15g}")
    print(f"upper   {_fmt(est.upper) if not np.isfinite(est.upper) else f'{est.upper:.15g}'}")
    print(f"witness {witness}")
    print(f"status  {est.status}")
    return EXIT_OK


def cmd_reproduce(args):
    from .worked_example import run

    search = SearchConfig(seed=args.seed or 0, starts=args.starts or 256, iters=args.iters or 400,
                          tolerance=args.tol or 1e-9, n_jobs=args.jobs)
    checks = run(search)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        mark = _color("ok  ", "32", sys.stdout) if c.passed else _color("DIFF", "31", sys.stdout)
        print(f"{mark} {c.name:<28} expected {c.expected:<22} actual {c.actual}")
    print(f"{len(checks) - len(failed)}/{len(checks)} values match")
    return EXIT_OK if not failed else EXIT_SOLVER


def build_parser():
    parser = argparse.ArgumentParser(prog="rkbsnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON or YAML solver config")
        p.add_argument("--out", help="report path")
        p.add_argument("--seed", type=int)
        p.add_argument("--starts", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--jobs", type=int, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("solve", help="run the full pipeline and write a solution report")
    common(p)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--include-uncertified-signs", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("admissible", help="print the admissibility table")
    common(p)
    p.set_defaults(func=cmd_admissible)

    p = sub.add_parser("supnorm", help="bracket the sup norm of a kernel combination")
    common(p)
    p.add_argument("--combination", required=True, help="comma-separated COEF:INDEX terms, e.g. '1:0,-1:1'")
    p.set_defaults(func=cmd_supnorm)

    p = sub.add_parser("reproduce-paper-example", help="recompute the built-in worked example")
    common(p, needs_config=False)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, EnumerationTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NoAnchorsError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        for i, reason in exc.reasons:
            print(f"  point {i}: {reason}", file=sys.stderr)
        return EXIT_SOLVER
    except IllConditionedError as exc:
        print(f"ill-conditioned: {exc}", file=sys.stderr)
        return EXIT_ILL_CONDITIONED
    except Exception as exc:  # any other failure inside the solver
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Data goes to stdout as CSV or ``key=value`` lines; diagnostics and timing go
to stderr. Exit codes: 0 ok, 2 invalid input, 3 configuration, 4 internal.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from .errors import ConfigurationError, RelsecError, ValidationError
from .fileformat import (dumps_document, emit_csv, format_cell, format_rate, parse_document,
                         read_document, set_pointer, to_document, write_text)
from .optimize import OptimizerConfig, optimize_design, sweep
from .prob import info_quantities
from .regime import OracleConfig, best_case_rate, case_rate, classify, oracle_max_rate
from .sim import SimConfig, simulate_blocks

RATE_COLUMNS = ("leaf", "tie", "r2", "r_hat", "wz_bin_rate", "bob_strategy", "eve_strategy",
                "r_tilde1", "r1", "r1_literal")
SWEEP_COLUMNS = ("param", "leaf", "r1", "baseline", "status")


def _kv(out, key, value):
    out.write(f"{key}={format_cell(value)}\n")


def _vector(v) -> str:
    return " ".join(format_rate(x) for x in np.asarray(v).ravel())


def _load(path, need_design=True):
    doc = parse_document(read_document(path))
    if need_design and doc.design is None:
        raise ValidationError(f"{path}: this command needs a 'design' block", [])
    return doc


def _choice_fields(rc):
    return {"r2": rc.r2, "r_hat": rc.r_hat, "wz_bin_rate": rc.wz_bin_rate,
            "bob_strategy": rc.bob_strategy, "eve_strategy": rc.eve_strategy,
            "r_tilde1": rc.r_tilde1, "r1": rc.r1}


def cmd_info(args, out):
    doc = _load(args.spec)
    for k, v in info_quantities(doc.spec, doc.design).as_dict().items():
        _kv(out, k, v)


def cmd_classify(args, out):
    doc = _load(args.spec)
    cases = classify(info_quantities(doc.spec, doc.design), args.tol)
    emit_csv(("leaf", "tie"), [(str(c.leaf), c.tie) for c in cases], stream=out)


def cmd_rate(args, out):
    doc = _load(args.spec)
    q = info_quantities(doc.spec, doc.design)
    rows = []
    for c in classify(q, args.tol):
        rc = case_rate(q, c.leaf, args.tol)
        f = _choice_fields(rc)
        rows.append((str(c.leaf), c.tie, *(f[k] for k in RATE_COLUMNS[2:9]), rc.r1_literal))
    emit_csv(RATE_COLUMNS, rows, stream=out)


def cmd_oracle(args, out):
    doc = _load(args.spec)
    rc = oracle_max_rate(info_quantities(doc.spec, doc.design), OracleConfig(grid=args.grid, tol=args.tol))
    _kv(out, "grid", args.grid)
    for k, v in _choice_fields(rc).items():
        _kv(out, k, v)
    _kv(out, "secrecy_valid", rc.secrecy_valid)


def _opt_config(args):
    return OptimizerConfig(restarts=args.restarts, max_iters=args.max_iters, comp_size_max=args.comp_max,
                           seed=args.seed, objective=args.objective, oracle_grid=args.oracle_grid)


def cmd_optimize(args, out):
    doc = _load(args.spec, need_design=False)
    cfg = _opt_config(args)
    res = optimize_design(doc.spec, cfg)
    print(f"optimize: {res.wall_time:.2f} s", file=sys.stderr)
    _kv(out, "seed", cfg.seed)
    _kv(out, "restarts", cfg.restarts)
    _kv(out, "objective", cfg.objective)
    _kv(out, "comp_size_max", max(cfg.comp_sizes(doc.spec)))
    _kv(out, "leaf", res.leaf)
    for k, v in _choice_fields(res.rate).items():
        _kv(out, k, v)
    _kv(out, "comp_size", res.design.comp_size)
    _kv(out, "p_x1", _vector(res.design.p_x1))
    _kv(out, "p_x2", _vector(res.design.p_x2))
    _kv(out, "q", _vector(res.design.q))
    if args.out:
        text = dumps_document(to_document(doc.spec, res.design, doc.meta or None, base=doc.raw))
        write_text(args.out, text)
        print(f"optimize: design written to {args.out}", file=sys.stderr)


def cmd_simulate(args, out):
    doc = _load(args.spec)
    best = best_case_rate(info_quantities(doc.spec, doc.design))
    pick = lambda given, default: default if given is None else given
    cfg = SimConfig(n=args.n, blocks=args.blocks, trials=args.trials, seed=args.seed, eps_typ=args.eps_typ,
                    equivocation=args.equivocation, codebooks=args.codebooks,
                    r1=pick(args.r1, best.r1), r_tilde1=pick(args.r_tilde1, best.r_tilde1),
                    r2=pick(args.r2, best.r2), r_hat=pick(args.r_hat, best.r_hat))
    res = simulate_blocks(doc.spec, doc.design, cfg)
    print(f"simulate: {res.elapsed:.2f} s", file=sys.stderr)
    for k in ("seed", "n", "blocks", "trials", "eps_typ", "equivocation", "codebooks"):
        _kv(out, k, getattr(cfg, k))
    for k, v in res.quantized_rates.items():
        _kv(out, k, v)
    _kv(out, "bob_block_error_rate", res.bob_block_error_rate)
    _kv(out, "relay_failure_rate", res.relay_failure_rate)
    if res.equivocation is not None:
        _kv(out, "equivocation", res.equivocation)
        _kv(out, "equivocation_stderr", res.equivocation_stderr)
    for row in res.per_block:
        _kv(out, f"block{row['block']}_bob_error_rate", row["bob_error_rate"])
        _kv(out, f"block{row['block']}_relay_failure_rate", row["relay_failure_rate"])


def cmd_sweep(args, out):
    template = read_document(args.spec)
    if args.steps < 0:
        raise ConfigurationError("steps must be >= 0")
    grid = [] if args.steps == 0 else list(np.linspace(args.start, args.stop, args.steps))
    set_pointer(template, args.param, 0.0)  # fail early on a bad pointer

    def generator(x):
        return parse_document(set_pointer(template, args.param, float(x))).spec

    rows = sweep(generator, grid, _opt_config(args))
    emit_csv(SWEEP_COLUMNS, [(r.param, r.leaf, r.r1, r.baseline, r.status) for r in rows],
             destination=args.out, stream=out)


def _nonneg_float(text):
    v = float(text)
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return v


def _pos_float(text):
    v = _nonneg_float(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _add_opt_args(p):
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--comp-max", type=int, default=None, help="largest compression alphabet tried")
    p.add_argument("--objective", choices=("case", "oracle"), default="case")
    p.add_argument("--oracle-grid", type=_pos_float, default=0.01)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relsec", description="Secrecy rates of a compress-forward relay "
                                 "channel with an eavesdropper.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="print the information quantities of a design")
    p.add_argument("spec")
    p.set_defaults(fn=cmd_info)

    for name, fn, hlp in (("classify", cmd_classify, "list the regimes that hold"),
                          ("rate", cmd_rate, "closed-form rate of every regime that holds")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("spec")
        p.add_argument("--tol", type=_nonneg_float, default=1e-9)
        p.set_defaults(fn=fn)

    p = sub.add_parser("oracle", help="brute-force best operating point")
    p.add_argument("spec")
    p.add_argument("--grid", type=_pos_float, default=0.005)
    p.add_argument("--tol", type=_nonneg_float, default=1e-9)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("optimize", help="search input designs")
    p.add_argument("spec")
    _add_opt_args(p)
    p.add_argument("--out", help="write the spec with the best design here")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo run of the block-Markov scheme")
    p.add_argument("spec")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--eps-typ", type=_nonneg_float, default=0.15)
    p.add_argument("--equivocation", choices=("off", "exact"), default="off")
    p.add_argument("--codebooks", choices=("per_trial", "fixed"), default="per_trial")
    for r in ("r1", "r_tilde1", "r2", "r_hat"):
        p.add_argument(f"--{r.replace('_', '-')}", dest=r, type=_nonneg_float, default=None,
                       help="override the rate taken from the best regime")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="optimize over a one-parameter family of specs")
    p.add_argument("spec", help="template document; cells may use names from 'params'")
    p.add_argument("--param", required=True, help="JSON pointer to the swept value, e.g. /params/p")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    _add_opt_args(p)
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.set_defaults(fn=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    out = sys.stdout
    try:
        args.fn(args, out)
    except RelsecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", ()):
            print(f"  {v}", file=sys.stderr)
        return exc.exit_code
    out.flush()
    print(f"elapsed: {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

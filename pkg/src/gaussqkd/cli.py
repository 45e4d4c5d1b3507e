"""Command-line front end: ``gaussqkd {analyze,interval,efficiency,sweep,simulate}``.

Exit codes: 0 success, 2 domain or precondition error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .gaussian_core import NonPhysicalError
from .protocol_sim import (
    SiftingWindow,
    ad_error_formula,
    simulate,
    to_jsonl,
    window_error_prediction,
)
from .qkd_analysis import (
    CoherentInsecureError,
    GridSpec,
    PPTStateError,
    QuadratureError,
    QuadSpec,
    StdSymmetricState,
    accept_interval,
    alpha,
    beta,
    efficiency,
    efficiency_mc,
    error_rate,
    sweep,
    write_csv,
)
from .qkd_analysis.efficiency import EfficiencyEstimate

EXIT_DOMAIN = 2
EXIT_IO = 3

_DEFAULT_QUAD = QuadSpec()


class DomainError(Exception):
    pass


def _state(args) -> StdSymmetricState:
    try:
        return StdSymmetricState(args.lam, args.cx, args.cp)
    except NonPhysicalError as exc:
        raise DomainError(str(exc)) from exc
    except ValueError as exc:
        raise DomainError(f"invalid state: {exc}") from exc


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def _emit(record: dict, as_json: bool, out=None):
    out = out or sys.stdout
    clean = {k: _num(v) for k, v in record.items()}
    if as_json:
        out.write(json.dumps(clean) + "\n")
        return
    width = max(len(k) for k in clean)
    for k, v in clean.items():
        shown = "" if v is None else json.dumps(v).strip('"')
        out.write(f"{k:<{width}}  {shown}\n")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _quad(args) -> QuadSpec:
    return QuadSpec(radius_sd=args.radius_sd, rtol=args.rtol, method=args.quad_method)


def cmd_analyze(args) -> int:
    s = _state(args)
    rec = {
        "lambda": s.lam,
        "cx": s.cx,
        "cp": s.cp,
        "physical": True,
        "nppt": s.nppt,
        "purity": s.purity,
        "ln": s.log_negativity,
        "alpha": alpha(s) if s.nppt else None,
        "coherent_margin": s.coherent_margin,
        "coherent_ok": s.coherent_ok,
        "beta": beta(s) if s.coherent_ok else None,
    }
    _emit(rec, args.json)
    return 0


def cmd_interval(args) -> int:
    s = _state(args)
    try:
        rep = accept_interval(s, args.x0a, args.attack)
    except (PPTStateError, CoherentInsecureError) as exc:
        raise DomainError(str(exc)) from exc
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    _emit(rep.as_dict(), args.json)
    return 0


def _estimate_dict(s: StdSymmetricState, est: EfficiencyEstimate) -> dict:
    return {
        "lambda": s.lam,
        "cx": s.cx,
        "cp": s.cp,
        "attack": est.attack,
        "method": est.method,
        "value": est.value,
        "error_bound": est.error_bound,
        "tail_mass": est.tail_mass,
        "n_samples": est.n_samples,
        "seed": est.seed,
    }


def cmd_efficiency(args) -> int:
    s = _state(args)
    try:
        if args.method == "monte-carlo":
            est = efficiency_mc(s, args.attack, n_samples=args.samples, seed=args.seed, workers=args.workers)
        else:
            args.quad_method = args.method
            est = efficiency(s, args.attack, _quad(args))
    except (PPTStateError, CoherentInsecureError, QuadratureError) as exc:
        raise DomainError(str(exc)) from exc
    _emit(_estimate_dict(s, est), args.json)
    return 0


def _figure_csvs(result) -> dict[str, str]:
    eff = ["ln,eff_individual,purity\n"]
    lna = ["alpha,ln,purity\n"]
    for r in result.records:
        if r.eff_individual is not None:
            eff.append(f"{r.ln:.12g},{r.eff_individual:.12g},{r.purity:.12g}\n")
        lna.append(f"{r.alpha:.12g},{r.ln:.12g},{r.purity:.12g}\n")
    return {"efficiency_vs_ln.csv": "".join(eff), "ln_vs_alpha.csv": "".join(lna)}


def cmd_sweep(args) -> int:
    try:
        grid = GridSpec(
            lam=tuple(args.lambda_range),
            cx=tuple(args.cx_range),
            cp=tuple(args.cp_range),
            cp_equals_cx=args.cp_equals_cx,
            coherent=not args.no_coherent,
        )
        quad = _quad(args)
        next(grid.points(), None)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc

    def progress(done, total):
        if not args.quiet and (done == total or done % 50 == 0):
            print(f"sweep: {done}/{total}", file=sys.stderr)

    result = sweep(grid, quad, workers=args.workers, progress=progress)
    if not result.records:
        print("warning: no admissible grid points (all skipped)", file=sys.stderr)
    text = write_csv(result, include_skipped=args.include_skipped)
    try:
        if args.output in (None, "-"):
            sys.stdout.write(text)
        else:
            atomic_write(args.output, text)
        if args.figures:
            fig_dir = Path(args.figures)
            fig_dir.mkdir(parents=True, exist_ok=True)
            for name, body in _figure_csvs(result).items():
                atomic_write(fig_dir / name, body)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def cmd_simulate(args) -> int:
    s = _state(args)
    try:
        window = SiftingWindow.for_state(s, args.x0, args.half_width, args.attack)
    except (PPTStateError, CoherentInsecureError, ValueError) as exc:
        raise DomainError(str(exc)) from exc
    if args.n < 1 or args.block_size < 1 or args.runs < 1:
        raise DomainError("n, block size and runs must be positive")
    run_seeds = np.random.SeedSequence(args.seed).generate_state(args.runs, dtype=np.uint64)
    records = [simulate(s, window, args.n, args.block_size, int(k)) for k in run_seeds]
    sifted = sum(r["n_sifted"] for r in records)
    errors = sum(r["n_errors"] for r in records)
    eps = errors / sifted if sifted else None
    summary = {
        "type": "summary",
        "master_seed": args.seed,
        "runs": args.runs,
        "n_sifted_total": sifted,
        "empirical_error": eps,
        "analytic_window_error": window_error_prediction(s, window),
        "analytic_point_error": error_rate(s, args.x0, args.x0),
        "block_size": args.block_size,
        "ad_error_at_empirical": None,
        "ad_bound_at_empirical": None,
    }
    if eps is not None and 0 < eps < 1:
        exact, bound = ad_error_formula(eps, args.block_size)
        summary.update(ad_error_at_empirical=exact, ad_bound_at_empirical=bound)
    text = to_jsonl(records + [summary])
    try:
        if args.output in (None, "-"):
            sys.stdout.write(text)
        else:
            atomic_write(args.output, text)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


def _add_state(p):
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="diagonal CM entry")
    p.add_argument("--cx", type=float, required=True, help="position correlation")
    p.add_argument("--cp", type=float, required=True, help="momentum correlation (<= cx)")


def _add_quad(p, method=True):
    p.add_argument("--radius-sd", type=float, default=_DEFAULT_QUAD.radius_sd,
                   help="truncation radius in marginal standard deviations")
    p.add_argument("--rtol", type=float, default=_DEFAULT_QUAD.rtol, help="quadrature relative tolerance")
    if method:
        p.add_argument("--quad-method", choices=("adaptive", "gauss"), default="gauss")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaussqkd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    a = sub.add_parser("analyze", help="physicality, entanglement and security flags of a state")
    _add_state(a)
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_analyze)

    i = sub.add_parser("interval", help="Bob's accepted range of |x0b| - |x0a|")
    _add_state(i)
    i.add_argument("--x0a", type=float, required=True)
    i.add_argument("--attack", choices=("individual", "coherent"), default="individual")
    i.add_argument("--json", action="store_true")
    i.set_defaults(func=cmd_interval)

    e = sub.add_parser("efficiency", help="efficiency by quadrature or Monte Carlo")
    _add_state(e)
    e.add_argument("--attack", choices=("individual", "coherent"), default="individual")
    e.add_argument("--method", choices=("adaptive", "gauss", "monte-carlo"), default="adaptive")
    e.add_argument("--samples", type=int, default=10**7)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=1)
    _add_quad(e, method=False)
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_efficiency)

    s = sub.add_parser("sweep", help="grid sweep to CSV (efficiency vs LN, LN vs alpha)")
    s.add_argument("--lambda-range", nargs=3, type=float, metavar=("MIN", "MAX", "STEPS"),
                   default=[1.05, 4.0, 20])
    s.add_argument("--cx-range", nargs=3, type=float, metavar=("MIN", "MAX", "STEPS"), default=[0.0, 4.0, 20])
    s.add_argument("--cp-range", nargs=3, type=float, metavar=("MIN", "MAX", "STEPS"), default=[0.0, 4.0, 20])
    s.add_argument("--cp-equals-cx", action="store_true", help="fully symmetric states, cp = cx")
    s.add_argument("--no-coherent", action="store_true", help="skip coherent-attack efficiencies")
    s.add_argument("--include-skipped", action="store_true", help="also write skipped grid points")
    s.add_argument("--output", "-o", default=None, help="CSV path (stdout if omitted)")
    s.add_argument("--figures", default=None, help="directory for per-figure CSVs")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--quiet", action="store_true")
    _add_quad(s)
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("simulate", help="Monte Carlo protocol run, JSON-lines transcript")
    _add_state(m)
    m.add_argument("--x0", type=float, required=True, help="Alice's target |x_a|")
    m.add_argument("--half-width", type=float, default=0.05)
    m.add_argument("--attack", choices=("individual", "coherent"), default="individual")
    m.add_argument("--n", type=int, default=10**6, help="emitted pairs per run")
    m.add_argument("--block-size", type=int, default=5)
    m.add_argument("--runs", type=int, default=1)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--output", "-o", default=None)
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

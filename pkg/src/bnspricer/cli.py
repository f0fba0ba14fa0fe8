"""Command-line entry point: single-price queries, experiment sweeps, and
model validation.

    bns price --set nv --strike 468.44 --maturity 0.0833 --method v1
    bns experiment --figure 2 --set nv --out fig2_nv.csv
    bns validate --set sch --horizon 0.4
"""

from __future__ import annotations

import argparse
import math
import sys

from . import __version__
from .approximator import approx_v1, approx_v2, approx_v3, bs_primal, correction_atm_itm
from .bns_model import MarketState, mc_call_price
from .errors import PricingError
from .experiments import (
    PRESETS,
    fig4_strike,
    load_parameter_file,
    make_model,
    run_convergence,
    run_fig1,
    run_fig2,
    run_fig3,
    run_fig4,
)
from .levy import validate_assumptions
from .reference import reference_price


def _resolve_set(token: str):
    key = token.strip().lower()
    if key in PRESETS:
        return PRESETS[key]
    return load_parameter_file(token)


def _cmd_price(args) -> int:
    pset = _resolve_set(args.set)
    strike = args.strike if args.strike is not None else pset.spot
    params, state = make_model(pset, horizon=args.maturity, strike=strike)
    tau = args.maturity
    tol = args.tol if args.tol is not None else 1e-5 * pset.spot

    if args.method in ("v1", "v2", "v3"):
        fn = {"v1": approx_v1, "v2": approx_v2, "v3": approx_v3}[args.method]
        res = fn(state, params, tau)
        print(f"price = {res.price:.10g}")
        print(f"method = {res.formula.value}  regime = {res.regime.value}  applicable = {res.applicable}")
        print(f"correction = {res.correction:.10g}")
    elif args.method == "bs":
        print(f"price = {bs_primal(state, params, tau):.10g}")
        print("method = bs_only")
    elif args.method == "fft":
        ref = reference_price(params, state, tau, tol)
        print(f"price = {ref.price:.10g}  error <= {ref.error:.3g}")
        print(f"method = {ref.method}")
    else:
        price, se = mc_call_price(params, state, args.paths, args.seed)
        print(f"price = {price:.10g}  std_error = {se:.3g}")
        print(f"method = mc  paths = {args.paths}  seed = {args.seed}")
    return 0


def _cmd_experiment(args) -> int:
    pset = _resolve_set(args.set)
    common = dict(out=args.out, seed=args.seed, tol=args.tol)
    if args.points is not None:
        common["points"] = args.points
    if args.figure == "conv":
        _, reports = run_convergence(pset, regime=args.regime, **common)
        for name, rep in reports.items():
            print(f"{name}: slope = {rep.slope:.4f}  r_squared = {rep.r_squared:.5f}")
    else:
        runner = {"1": run_fig1, "2": run_fig2, "3": run_fig3, "4": run_fig4}[args.figure]
        runner(pset, **common)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    pset = _resolve_set(args.set)
    horizon = args.horizon
    params, state = make_model(pset, horizon=horizon, strike=pset.spot)
    ok = True

    report = validate_assumptions(params.nu, params.rho, horizon)
    print(f"assumptions over [0, {horizon}]:")
    print(f"  exponential moment ({report.exp_moment_criterion}): "
          f"{report.exp_moment_lhs:.6g} vs {report.exp_moment_rhs:.6g} -> "
          f"{'pass' if report.exp_moment_ok else 'FAIL'}")
    print(f"  density envelope (C0={report.envelope_c0:.6g}, C1={report.envelope_c1:.6g}): "
          f"{'pass' if report.envelope_ok else 'FAIL'}")
    print(f"  density decreasing: {'pass' if report.density_decreasing else 'FAIL'}")
    ok &= report.ok

    # oracle cross-checks: closed-form correction vs direct quadrature, and
    # the FFT pricer vs Monte Carlo at the money
    corr_closed = correction_atm_itm(state, params, horizon, method="closed")
    corr_quad = correction_atm_itm(state, params, horizon, method="quadrature")
    scale = max(abs(corr_closed), abs(corr_quad), 1e-30)
    corr_ok = abs(corr_closed - corr_quad) / scale < 1e-8
    print(f"  correction closed vs quadrature: rel diff "
          f"{abs(corr_closed - corr_quad) / scale:.3g} -> {'pass' if corr_ok else 'FAIL'}")
    ok &= corr_ok

    tol = 1e-5 * pset.spot
    ref = reference_price(params, state, horizon, tol)
    mc, se = mc_call_price(params, state, args.paths, args.seed)
    gap = abs(ref.price - mc)
    budget = 3.0 * se + ref.error
    mc_ok = gap <= budget
    print(f"  fft {ref.price:.8g} vs mc {mc:.8g}: |diff| {gap:.3g} "
          f"within {budget:.3g} -> {'pass' if mc_ok else 'FAIL'}")
    ok &= mc_ok

    print("all checks passed" if ok else "VALIDATION FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bns", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price a single call option")
    p.add_argument("--set", required=True, help="nv, sch, or a parameter file path")
    p.add_argument("--strike", type=float, default=None, help="strike (default: at the money)")
    p.add_argument("--maturity", type=float, required=True, help="time to maturity in years")
    p.add_argument("--method", choices=("v1", "v2", "v3", "fft", "mc", "bs"), default="v1")
    p.add_argument("--paths", type=int, default=200_000, help="MC paths (method=mc)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None, help="reference tolerance (method=fft)")
    p.set_defaults(func=_cmd_price)

    e = sub.add_parser("experiment", help="run an error-study sweep, write CSV")
    e.add_argument("--figure", choices=("1", "2", "3", "4", "conv"), required=True)
    e.add_argument("--set", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--points", type=int, default=None)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--tol", type=float, default=None)
    e.add_argument("--regime", choices=("itm", "atm"), default="itm", help="convergence sweep regime")
    e.set_defaults(func=_cmd_experiment)

    v = sub.add_parser("validate", help="assumption checks and oracle cross-checks")
    v.add_argument("--set", required=True)
    v.add_argument("--horizon", type=float, default=0.0833)
    v.add_argument("--paths", type=int, default=200_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PricingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Error-study sweeps and convergence-slope reports, emitted as CSV.

Four strike/maturity sweeps (the CLI's --figure 1..4) compare the
approximations against the cross-validated reference pricer, and a
convergence runner fits log-log slopes of |approximation - reference|
against time to maturity. Sweep points are independent of one another and
rows are ordered by the sweep variable; reruns with the same configuration
and seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import __version__
from .approximator import approx_v1, approx_v2, approx_v3, bs_primal
from .bns_model import BnsParams, MarketState
from .errors import DegenerateFitError, DomainError, QuadratureError
from .levy import LevyMeasure, MeasureFamily, validate_assumptions
from .reference import CfGrid, fft_call_prices, reference_price

__all__ = [
    "ParameterSet",
    "NV",
    "SCH",
    "PRESETS",
    "ExperimentRow",
    "SlopeReport",
    "make_model",
    "load_parameter_file",
    "fit_loglog",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_convergence",
]

DEFAULT_POINTS = 50
DEFAULT_MATURITY = 0.0833


@dataclass(frozen=True)
class ParameterSet:
    """A named model calibration (jump measure family is IG_OU throughout)."""

    name: str
    rho: float
    lam: float
    a: float
    b: float
    sigma_sq: float
    spot: float
    rate: float


NV = ParameterSet(name="NV", rho=-4.7039, lam=2.4958, a=0.0872, b=11.98, sigma_sq=0.0041, spot=468.44, rate=0.0319)
SCH = ParameterSet(name="Sch", rho=-0.1926, lam=0.0636, a=6.2410, b=0.7995, sigma_sq=0.0156, spot=1124.47, rate=0.007)
PRESETS = {"nv": NV, "sch": SCH}

_FILE_KEYS = {
    "name": "name",
    "rho": "rho",
    "lambda": "lam",
    "lam": "lam",
    "a": "a",
    "b": "b",
    "sigma_sq": "sigma_sq",
    "sigma_t_sq": "sigma_sq",
    "spot": "spot",
    "s_t": "spot",
    "s0": "spot",
    "rate": "rate",
    "r": "rate",
}


def load_parameter_file(path: str) -> ParameterSet:
    """Read a plain key = value file mirroring the ParameterSet fields."""
    values = {"name": "custom"}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip().lower()
            if key not in _FILE_KEYS:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            field = _FILE_KEYS[key]
            values[field] = val.strip() if field == "name" else float(val)
    missing = {f.name for f in fields(ParameterSet)} - set(values)
    if missing:
        raise DomainError(f"{path}: missing keys {sorted(missing)}")
    return ParameterSet(**values)


def make_model(pset: ParameterSet, horizon: float, strike: float):
    """Build the model and the t = 0 market state for one sweep point."""
    nu = LevyMeasure(kind=MeasureFamily.IG_OU, a=pset.a, b=pset.b, lam=pset.lam)
    params = BnsParams(
        rho=pset.rho,
        lam=pset.lam,
        nu=nu,
        sigma0_sq=pset.sigma_sq,
        s0=pset.spot,
        rate=pset.rate,
        horizon=horizon,
    )
    state = MarketState.from_spot(spot=pset.spot, sigma_t_sq=pset.sigma_sq, strike=strike, t=0.0)
    return params, state


@dataclass(frozen=True)
class ExperimentRow:
    """One record of an error study; unused columns stay None per sweep."""

    sweep_variable: float
    reference_price: float
    bs_only: float
    v1: Optional[float] = None
    v2: Optional[float] = None
    v3: Optional[float] = None
    rel_err_bs: Optional[float] = None
    rel_err_v1: Optional[float] = None
    rel_err_v3: Optional[float] = None
    abs_err_bs: Optional[float] = None
    abs_err_v1: Optional[float] = None
    abs_err_v2: Optional[float] = None
    abs_err_v3: Optional[float] = None
    regime: str = ""


@dataclass(frozen=True)
class SlopeReport:
    """Least-squares fit of log|error| against log(tau)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_loglog(tau, err) -> SlopeReport:
    tau = np.asarray(tau, dtype=float)
    err = np.asarray(err, dtype=float)
    if tau.size < 3:
        raise DomainError("slope fit needs at least 3 points")
    lx, ly = np.log(tau), np.log(err)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return SlopeReport(slope=float(slope), intercept=float(intercept), r_squared=r2, n_points=tau.size)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return format(value, ".10g")


def _write_csv(out, pset, figure, seed, tol, points, columns, rows, trailer=()):
    buf = io.StringIO()
    buf.write(
        f"# figure={figure} set={pset.name} rho={pset.rho} lambda={pset.lam} a={pset.a} "
        f"b={pset.b} sigma_sq={pset.sigma_sq} spot={pset.spot} rate={pset.rate} "
        f"seed={seed} tol={_fmt(tol)} points={points} version={__version__}\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(getattr(row, col)) for col in columns])
    for line in trailer:
        buf.write(f"# {line}\n")
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def _reference_curve(pset, horizon, tol, max_refine=4):
    """One refined FFT curve serving every strike of a fixed-maturity sweep."""
    params, state = make_model(pset, horizon, strike=pset.spot)
    eta, n = 0.25, 4096
    for _ in range(max_refine):
        curve = fft_call_prices(params, state, horizon, CfGrid(eta=eta, n=n))
        if curve.refine_error <= tol:
            return params, state, curve
        eta, n = 0.5 * eta, 2 * n
    raise QuadratureError(
        f"reference curve stuck at {curve.refine_error:.3e} > tol {tol:.3e}",
        achieved=curve.refine_error,
    )


def _itm_start(pset) -> float:
    return math.exp(math.log(pset.spot) - 2.0 * pset.sigma_sq) - 0.05 * pset.spot


def _otm_end(pset) -> float:
    # the exact endpoint sits on the deep-OTM boundary where the formulas are
    # inapplicable by definition; stay strictly inside by a relative nudge
    return math.exp(math.log(pset.spot) + 2.0 * pset.sigma_sq) * (1.0 - 1e-12)


def fig4_strike(pset) -> float:
    return math.exp(math.log(pset.spot) - 2.0 * pset.sigma_sq) - 0.02 * pset.spot


def run_fig1(pset: ParameterSet, out=None, points: int = DEFAULT_POINTS, seed: int = 0, tol=None):
    """|ITM-only approximation - reference| across strikes up to the money.

    The error grows rapidly as the strike approaches the spot, where the
    correction's lower integration limit collapses into the density's
    singularity.
    """
    horizon = DEFAULT_MATURITY
    tol = 1e-6 * pset.spot if tol is None else tol
    params, state0, curve = _reference_curve(pset, horizon, tol)
    strikes = np.linspace(_itm_start(pset), pset.spot, points)
    rows = []
    for k in strikes:
        state = MarketState.from_spot(spot=pset.spot, sigma_t_sq=pset.sigma_sq, strike=float(k))
        ref = curve.price(float(k))
        bs = bs_primal(state, params, horizon)
        v2 = approx_v2(state, params, horizon)
        rows.append(
            ExperimentRow(
                sweep_variable=float(k),
                reference_price=ref,
                bs_only=bs,
                v2=v2.price,
                abs_err_bs=abs(bs - ref),
                abs_err_v2=abs(v2.price - ref),
                regime=v2.regime.value,
            )
        )
    columns = ["sweep_variable", "reference_price", "bs_only", "v2", "abs_err_bs", "abs_err_v2", "regime"]
    return _write_csv(out, pset, "1", seed, tol, points, columns, rows), rows


def run_fig2(pset: ParameterSet, out=None, points: int = DEFAULT_POINTS, seed: int = 0, tol=None):
    """Relative errors of the bare primal price and of v1/v3 across the
    strike band from comfortably in the money to the deep-OTM boundary."""
    horizon = DEFAULT_MATURITY
    tol = 1e-6 * pset.spot if tol is None else tol
    params, state0, curve = _reference_curve(pset, horizon, tol)
    strikes = np.linspace(_itm_start(pset), _otm_end(pset), points)
    rows = []
    for k in strikes:
        state = MarketState.from_spot(spot=pset.spot, sigma_t_sq=pset.sigma_sq, strike=float(k))
        ref = curve.price(float(k))
        bs = bs_primal(state, params, horizon)
        v1 = approx_v1(state, params, horizon)
        v3 = approx_v3(state, params, horizon)
        rows.append(
            ExperimentRow(
                sweep_variable=float(k),
                reference_price=ref,
                bs_only=bs,
                v1=v1.price,
                v3=v3.price,
                rel_err_bs=abs(bs - ref) / ref,
                rel_err_v1=abs(v1.price - ref) / ref,
                rel_err_v3=abs(v3.price - ref) / ref,
                regime=v1.regime.value,
            )
        )
    columns = ["sweep_variable", "reference_price", "bs_only", "v1", "v3", "rel_err_bs", "rel_err_v1", "rel_err_v3", "regime"]
    return _write_csv(out, pset, "2", seed, tol, points, columns, rows), rows


def _maturity_sweep(pset, strike, points, tol, with_v3):
    maturities = np.linspace(0.01, 0.4, points)
    rows = []
    for horizon in maturities:
        horizon = float(horizon)
        params, state = make_model(pset, horizon, strike)
        ref = reference_price(params, state, horizon, tol).price
        bs = bs_primal(state, params, horizon)
        v1 = approx_v1(state, params, horizon)
        row = dict(
            sweep_variable=horizon,
            reference_price=ref,
            bs_only=bs,
            v1=v1.price,
            rel_err_bs=abs(bs - ref) / ref,
            rel_err_v1=abs(v1.price - ref) / ref,
            regime=v1.regime.value,
        )
        if with_v3:
            v3 = approx_v3(state, params, horizon)
            row["v3"] = v3.price
            row["rel_err_v3"] = abs(v3.price - ref) / ref
        rows.append(ExperimentRow(**row))
    return rows


def run_fig3(pset: ParameterSet, out=None, points: int = DEFAULT_POINTS, seed: int = 0, tol=None):
    """At-the-money relative errors against maturities in [0.01, 0.4]; the
    hybrid is omitted because it coincides with v1 at the money."""
    tol = 1e-6 * pset.spot if tol is None else tol
    rows = _maturity_sweep(pset, pset.spot, points, tol, with_v3=False)
    columns = ["sweep_variable", "reference_price", "bs_only", "v1", "rel_err_bs", "rel_err_v1", "regime"]
    return _write_csv(out, pset, "3", seed, tol, points, columns, rows), rows


def run_fig4(pset: ParameterSet, out=None, points: int = DEFAULT_POINTS, seed: int = 0, tol=None):
    """In-the-money relative errors against maturity at the fixed strike
    exp(x0 - 2*sigma^2) - 0.02*spot, with a slope fit over tau in [0.01, 0.1]."""
    tol = 1e-6 * pset.spot if tol is None else tol
    rows = _maturity_sweep(pset, fig4_strike(pset), points, tol, with_v3=True)
    taus = np.array([r.sweep_variable for r in rows])
    errs = np.array([abs(r.v3 - r.reference_price) for r in rows])
    mask = (taus >= 0.01) & (taus <= 0.1)
    trailer = ()
    if mask.sum() >= 3:
        rep = fit_loglog(taus[mask], errs[mask])
        trailer = (
            f"v3 slope fit over tau in [0.01, 0.1]: slope={rep.slope:.6g} "
            f"intercept={rep.intercept:.6g} r_squared={rep.r_squared:.6g} points={rep.n_points}",
        )
    columns = ["sweep_variable", "reference_price", "bs_only", "v1", "v3", "rel_err_bs", "rel_err_v1", "rel_err_v3", "regime"]
    return _write_csv(out, pset, "4", seed, tol, points, columns, rows, trailer), rows


def run_convergence(
    pset: ParameterSet,
    regime: str,
    out=None,
    points: int = 8,
    tau_lo: float = 0.005,
    tau_hi: float = 0.1,
    seed: int = 0,
    tol=None,
):
    """Slope report for |approximation - reference| on a geometric maturity grid.

    The reference tolerance is tightened (and, failing that, the grid is
    shifted upward) until it sits at least 10x below the smallest
    approximation error entering any fit; otherwise the fit is degenerate.
    Returns (csv_text, {formula: SlopeReport}).
    """
    if regime not in ("itm", "atm"):
        raise DomainError(f"regime must be 'itm' or 'atm', got {regime!r}")
    strike = fig4_strike(pset) if regime == "itm" else pset.spot
    formulas = ("v1", "v2", "v3") if regime == "itm" else ("v1", "v3")
    tol = 1e-7 * pset.spot if tol is None else tol

    for attempt in range(3):
        taus = np.geomspace(tau_lo, tau_hi, points)
        rows, errors = [], {f: [] for f in formulas}
        for horizon in taus:
            horizon = float(horizon)
            params, state = make_model(pset, horizon, strike)
            ref = reference_price(params, state, horizon, tol)
            approx = {
                "v1": approx_v1(state, params, horizon).price,
                "v3": approx_v3(state, params, horizon).price,
            }
            if "v2" in formulas:
                approx["v2"] = approx_v2(state, params, horizon).price
            for f in formulas:
                errors[f].append(abs(approx[f] - ref.price))
            rows.append(
                ExperimentRow(
                    sweep_variable=horizon,
                    reference_price=ref.price,
                    bs_only=bs_primal(state, params, horizon),
                    v1=approx["v1"],
                    v2=approx.get("v2"),
                    v3=approx["v3"],
                    abs_err_v1=errors["v1"][-1],
                    abs_err_v2=errors["v2"][-1] if "v2" in formulas else None,
                    abs_err_v3=errors["v3"][-1],
                    regime=regime,
                )
            )
        smallest = min(min(errs) for errs in errors.values())
        if smallest >= 10.0 * tol:
            break
        if tol > 1e-11 * pset.spot:
            tol = max(1e-11 * pset.spot, tol * 1e-2)
        else:
            tau_lo, tau_hi = 2.0 * tau_lo, 2.0 * tau_hi
    else:
        raise DegenerateFitError(
            f"approximation errors ({smallest:.3e}) are not resolvable above "
            f"the reference tolerance ({tol:.3e})"
        )

    reports = {f: fit_loglog(taus, errors[f]) for f in formulas}
    trailer = tuple(
        f"{f} slope={rep.slope:.6g} intercept={rep.intercept:.6g} "
        f"r_squared={rep.r_squared:.6g} points={rep.n_points}"
        for f, rep in reports.items()
    )
    columns = [
        "sweep_variable", "reference_price", "bs_only", "v1", "v2", "v3",
        "abs_err_v1", "abs_err_v2", "abs_err_v3", "regime",
    ]
    text = _write_csv(out, pset, "conv", seed, tol, points, columns, rows, trailer)
    return text, reports

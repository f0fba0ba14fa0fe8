"""Short-maturity call price approximations: primal lognormal term plus a
computable correction for the jump contribution.

Moneyness regimes (m = X_t - log K against the squared volatility):

* ITM       m >= 2*sigma^2,
* NEAR_ATM  |m| < 2*sigma^2,
* DEEP_OTM  m <= -2*sigma^2 (no approximation applies; prices there are
  near zero at short maturity).

Three formulas: ``v1`` adds a CDF-damped tail correction and applies in
ITM and NEAR_ATM; ``v2`` adds an undamped tail correction and is reliable
for ITM only; ``v3`` is the regime hybrid (v2 when ITM, v1 when NEAR_ATM).
As maturity shrinks the error is O(tau^{3/2}) for ITM (v1 and v2) and
O(tau) near the money.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .blackscholes import BsInputs, bs_price, d_plus_minus, norm_cdf, op_Lbar
from .bns_model import BnsParams, MarketState
from .errors import DomainError, RegimeError
from .levy import LevyMeasure

__all__ = [
    "Regime",
    "Formula",
    "ApproxResult",
    "CorrectionInputs",
    "classify_regime",
    "bs_primal",
    "correction_atm_itm",
    "correction_itm",
    "approx_v1",
    "approx_v2",
    "approx_v3",
    "additional_term_oracle",
]


class Regime(Enum):
    DEEP_OTM = "deep_otm"
    NEAR_ATM = "near_atm"
    ITM = "itm"


class Formula(Enum):
    V1 = "v1"
    V2 = "v2"
    V3 = "v3"
    BS_ONLY = "bs_only"


def classify_regime(moneyness: float, sigma_sq: float) -> Regime:
    """Exhaustive, mutually exclusive classification; the upper boundary
    m = 2*sigma^2 counts as ITM, the lower boundary m = -2*sigma^2 as DEEP_OTM."""
    if moneyness >= 2.0 * sigma_sq:
        return Regime.ITM
    if moneyness <= -2.0 * sigma_sq:
        return Regime.DEEP_OTM
    return Regime.NEAR_ATM


@dataclass(frozen=True)
class CorrectionInputs:
    """Scaled moneyness levels and the current-state moneyness pair.

    z0 is the jump size that exactly erases the (rate-adjusted) moneyness,
    zbar the size matched to the near-ATM regime width; the correction
    integrals start at z0 (ITM-only form) or max(z0, zbar).
    """

    z0: float
    zbar: float
    d_cap_plus: float
    d_cap_minus: float

    @classmethod
    def from_state(cls, state: MarketState, params: BnsParams, tau: float) -> "CorrectionInputs":
        if tau <= 0.0:
            raise DomainError(f"correction inputs need tau > 0, got {tau}")
        rho_abs = -params.rho
        z0 = (state.moneyness() + params.rate * tau) / rho_abs
        zbar = 2.0 * state.sigma_t_sq / rho_abs
        dp, dm = d_plus_minus(
            BsInputs(tau=tau, x=state.x, sigma2=state.sigma_t_sq, strike=state.strike, rate=params.rate)
        )
        return cls(z0=z0, zbar=zbar, d_cap_plus=dp, d_cap_minus=dm)


def bs_primal(state: MarketState, params: BnsParams, tau: float) -> float:
    """The primal term: the lognormal price at the current squared volatility."""
    return bs_price(
        BsInputs(tau=tau, x=state.x, sigma2=state.sigma_t_sq, strike=state.strike, rate=params.rate)
    )


def _tail_pair(nu: LevyMeasure, lower: float, rho_abs: float):
    return nu.tail_mass(lower), nu.tilted_tail(lower, rho_abs)


def _tail_pair_quadrature(nu: LevyMeasure, lower: float, rho_abs: float):
    # independent route: integrate the density itself instead of the
    # closed-form tails; split keeps the adaptive rule on a finite panel
    def piece(f, a, b):
        val, _ = quad(f, a, b, epsabs=1e-14, epsrel=1e-11, limit=200)
        return val

    mid = lower + 1.0
    t0 = piece(nu.density, lower, mid) + piece(nu.density, mid, np.inf)
    tilt = lambda z: math.exp(-rho_abs * z) * nu.density(z)
    t1 = piece(tilt, lower, mid) + piece(tilt, mid, np.inf)
    return t0, t1


def correction_atm_itm(
    state: MarketState, params: BnsParams, tau: float, method: str = "closed"
) -> float:
    """CDF-damped tail correction, valid in the ITM and NEAR_ATM regimes.

    tau * [K e^{-r tau} Phi(D-) * nu([L, inf))
           - e^x Phi(D+) * integral of e^{-|rho| z} over [L, inf)]
    with L = max(z0, zbar).
    """
    if tau <= 0.0:
        raise DomainError(f"correction needs tau > 0, got {tau}")
    regime = classify_regime(state.moneyness(), state.sigma_t_sq)
    if regime is Regime.DEEP_OTM:
        raise RegimeError("CDF-damped correction is not defined deep out of the money")
    if params.nu.is_zero:
        return 0.0
    ci = CorrectionInputs.from_state(state, params, tau)
    lower = max(ci.z0, ci.zbar)
    rho_abs = -params.rho
    pair = _tail_pair if method == "closed" else _tail_pair_quadrature
    tail, tilted = pair(params.nu, lower, rho_abs)
    disc_k = state.strike * math.exp(-params.rate * tau)
    return tau * (disc_k * norm_cdf(ci.d_cap_minus) * tail - math.exp(state.x) * norm_cdf(ci.d_cap_plus) * tilted)


def correction_itm(
    state: MarketState, params: BnsParams, tau: float, method: str = "closed"
) -> float:
    """Undamped tail correction, defined when the rate-adjusted moneyness is
    positive (z0 > 0); the integrand vanishes at z0 and increases beyond, so
    the value is nonnegative."""
    if tau <= 0.0:
        raise DomainError(f"correction needs tau > 0, got {tau}")
    if params.nu.is_zero:
        return 0.0
    ci = CorrectionInputs.from_state(state, params, tau)
    if ci.z0 <= 0.0:
        raise DomainError(
            f"ITM-only correction needs positive rate-adjusted moneyness, got z0 = {ci.z0}"
        )
    rho_abs = -params.rho
    pair = _tail_pair if method == "closed" else _tail_pair_quadrature
    tail, tilted = pair(params.nu, ci.z0, rho_abs)
    disc_k = state.strike * math.exp(-params.rate * tau)
    return tau * (disc_k * tail - math.exp(state.x) * tilted)


@dataclass(frozen=True)
class ApproxResult:
    """An approximate price, the regime it was computed in, which formula
    produced it, whether that formula is applicable there, and the
    correction alone."""

    price: float
    regime: Regime
    formula: Formula
    applicable: bool
    correction: float


def _payoff_result(state: MarketState, regime: Regime, formula: Formula, applicable: bool) -> ApproxResult:
    payoff = max(math.exp(state.x) - state.strike, 0.0)
    return ApproxResult(price=payoff, regime=regime, formula=formula, applicable=applicable, correction=0.0)


def approx_v1(state: MarketState, params: BnsParams, tau: float) -> ApproxResult:
    """Primal price plus the CDF-damped correction; falls back to the bare
    primal price (flagged inapplicable) deep out of the money."""
    regime = classify_regime(state.moneyness(), state.sigma_t_sq)
    if regime is Regime.DEEP_OTM:
        if tau == 0.0:
            return _payoff_result(state, regime, Formula.BS_ONLY, applicable=False)
        return ApproxResult(
            price=bs_primal(state, params, tau),
            regime=regime,
            formula=Formula.BS_ONLY,
            applicable=False,
            correction=0.0,
        )
    if tau == 0.0:
        return _payoff_result(state, regime, Formula.V1, applicable=True)
    corr = correction_atm_itm(state, params, tau)
    return ApproxResult(
        price=bs_primal(state, params, tau) + corr,
        regime=regime,
        formula=Formula.V1,
        applicable=True,
        correction=corr,
    )


def approx_v2(state: MarketState, params: BnsParams, tau: float) -> ApproxResult:
    """Primal price plus the undamped tail correction.

    Computable whenever z0 > 0 (strictly in the money after rate
    adjustment), but flagged applicable only in the ITM regime: between ATM
    and the regime boundary the integral blows up as z0 shrinks.
    """
    regime = classify_regime(state.moneyness(), state.sigma_t_sq)
    if tau == 0.0:
        return _payoff_result(state, regime, Formula.V2, applicable=regime is Regime.ITM)
    try:
        corr = correction_itm(state, params, tau)
    except DomainError as exc:
        raise RegimeError(f"ITM-only formula requested out of the money: {exc}") from exc
    return ApproxResult(
        price=bs_primal(state, params, tau) + corr,
        regime=regime,
        formula=Formula.V2,
        applicable=regime is Regime.ITM,
        correction=corr,
    )


def approx_v3(state: MarketState, params: BnsParams, tau: float) -> ApproxResult:
    """Regime hybrid: the undamped correction when ITM, the CDF-damped one
    near the money; identical to v2 / v1 respectively on those regimes."""
    regime = classify_regime(state.moneyness(), state.sigma_t_sq)
    if regime is Regime.DEEP_OTM:
        raise RegimeError("no approximation applies deep out of the money")
    if tau == 0.0:
        return _payoff_result(state, regime, Formula.V3, applicable=True)
    if regime is Regime.ITM:
        corr = correction_itm(state, params, tau)
    else:
        corr = correction_atm_itm(state, params, tau)
    return ApproxResult(
        price=bs_primal(state, params, tau) + corr,
        regime=regime,
        formula=Formula.V3,
        applicable=True,
        correction=corr,
    )


def additional_term_oracle(state: MarketState, params: BnsParams, tau: float, tol: float = 1e-10) -> float:
    """tau times the quadrature of the single-jump operator against the jump
    density: the exact term both corrections approximate as tau -> 0."""
    if tau <= 0.0:
        raise DomainError(f"additional term needs tau > 0, got {tau}")
    inp = BsInputs(tau=tau, x=state.x, sigma2=state.sigma_t_sq, strike=state.strike, rate=params.rate)
    value, _ = op_Lbar(inp, params.nu, params.rho, tol=tol)
    return tau * value

"""The lognormal call price as a function of (tau, x, sigma^2) and the
difference/jump operators built on it.

Everything here is deterministic scalar math: the price function itself,
its log-price delta and squared-volatility derivative, the two-sided shift
operator, the single-jump operator combining a leveraged log-price shift
with a delta compensation, and the integral of that operator against a jump
measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

from .errors import DomainError, QuadratureError
from .levy import LevyMeasure, MeasureFamily

__all__ = [
    "BsInputs",
    "norm_cdf",
    "norm_pdf",
    "bs_price",
    "d_plus_minus",
    "d_plus_minus_shifted",
    "bs_delta_x",
    "bs_dsigma2",
    "op_delta",
    "op_L_z",
    "op_Lbar",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(t):
    """Standard normal CDF through erfc (absolute error below 1e-15)."""
    return 0.5 * erfc(-np.asarray(t, dtype=float) / _SQRT2)[()]


def norm_pdf(t):
    t = np.asarray(t, dtype=float)
    return (_INV_SQRT_2PI * np.exp(-0.5 * t * t))[()]


@dataclass(frozen=True)
class BsInputs:
    """Arguments of the price function: time to maturity (years), log price,
    squared volatility (per year), strike and short rate."""

    tau: float
    x: float
    sigma2: float
    strike: float
    rate: float = 0.0

    def __post_init__(self):
        if self.sigma2 <= 0.0:
            raise DomainError(f"sigma2 must be > 0, got {self.sigma2}")
        if self.strike <= 0.0:
            raise DomainError(f"strike must be > 0, got {self.strike}")
        if self.tau < 0.0:
            raise DomainError(f"tau must be >= 0, got {self.tau}")
        if self.rate < 0.0:
            raise DomainError(f"rate must be >= 0, got {self.rate}")


def d_plus_minus(inp: BsInputs):
    """Standardized moneyness pair; d_plus - d_minus = sigma*sqrt(tau)."""
    if inp.tau == 0.0:
        raise DomainError("moneyness pair is undefined at tau = 0")
    sig_rt = math.sqrt(inp.sigma2 * inp.tau)
    core = (inp.x - math.log(inp.strike) + inp.rate * inp.tau) / sig_rt
    return core + 0.5 * sig_rt, core - 0.5 * sig_rt


def d_plus_minus_shifted(inp: BsInputs, shift: float):
    """Moneyness pair with the log price shifted by ``shift`` at fixed sigma2.

    Equals d_plus_minus evaluated at x + shift; ``shift = rho*z`` gives the
    leveraged-jump variant.
    """
    dp, dm = d_plus_minus(inp)
    step = shift / math.sqrt(inp.sigma2 * inp.tau)
    return dp + step, dm + step


def bs_price(inp: BsInputs) -> float:
    """Call price e^x Phi(d+) - K e^{-r tau} Phi(d-); payoff (e^x - K)^+ at tau = 0."""
    if inp.tau == 0.0:
        return max(math.exp(inp.x) - inp.strike, 0.0)
    dp, dm = d_plus_minus(inp)
    return math.exp(inp.x) * norm_cdf(dp) - inp.strike * math.exp(-inp.rate * inp.tau) * norm_cdf(dm)


def bs_delta_x(inp: BsInputs) -> float:
    """Derivative in the log price: e^x Phi(d+)."""
    dp, _ = d_plus_minus(inp)
    return math.exp(inp.x) * norm_cdf(dp)


def bs_dsigma2(inp: BsInputs) -> float:
    """Derivative in squared volatility: (sqrt(tau)/(2 sigma)) K e^{-r tau} phi(d-).

    Nonnegative and bounded by (sqrt(tau)/(2 sigma)) K e^{-r tau} / sqrt(2 pi).
    """
    _, dm = d_plus_minus(inp)
    sigma = math.sqrt(inp.sigma2)
    return (
        0.5 * math.sqrt(inp.tau) / sigma * inp.strike * math.exp(-inp.rate * inp.tau) * norm_pdf(dm)
    )


def op_delta(a: float, b: float, inp: BsInputs) -> float:
    """Two-sided shift: price at (x+a, sigma2+b) minus price at (x, sigma2)."""
    if inp.sigma2 + b <= 0.0:
        raise DomainError(f"shifted variance must stay positive, got {inp.sigma2 + b}")
    shifted = replace(inp, x=inp.x + a, sigma2=inp.sigma2 + b)
    return bs_price(shifted) - bs_price(inp)


def op_L_z(z: float, inp: BsInputs, rho: float, form: str = "phi_diff") -> float:
    """Single-jump operator: leveraged shift by rho*z plus delta compensation.

    ``phi_diff`` evaluates the algebraically reduced form
    e^{x+rho z}(Phi(d+_s)-Phi(d+)) - K e^{-r tau}(Phi(d-_s)-Phi(d-));
    ``definition`` evaluates the shift-plus-delta definition directly.
    Both agree to floating tolerance; goes to 0 as z -> 0.
    """
    if z <= 0.0:
        raise DomainError(f"jump size must be > 0, got {z}")
    if inp.tau == 0.0:
        raise DomainError("jump operator is undefined at tau = 0")
    if form == "definition":
        return op_delta(rho * z, 0.0, inp) + bs_delta_x(inp) * (1.0 - math.exp(rho * z))
    dp, dm = d_plus_minus(inp)
    dps, dms = d_plus_minus_shifted(inp, rho * z)
    return math.exp(inp.x + rho * z) * (norm_cdf(dps) - norm_cdf(dp)) - (
        inp.strike * math.exp(-inp.rate * inp.tau) * (norm_cdf(dms) - norm_cdf(dm))
    )


def _tail_cutoff(nu: LevyMeasure) -> float:
    # beyond this point the density's exponential tail is < ~1e-22 of its
    # z = 1 level, negligible against any achievable tolerance
    rate = nu.c2 if nu.kind is MeasureFamily.IG_OU else nu.b
    return max(2.0, 1.0 + 50.0 / rate)


def op_Lbar(inp: BsInputs, nu: LevyMeasure, rho: float, tol: float = 1e-10):
    """Integral of the single-jump operator against the jump density.

    Returns ``(value, error_estimate)``. The integrand is O(z) at the origin
    (so an integrable z**-3/2 density singularity is harmless) and decays
    with the density's exponential tail. The domain is split at z = 1: the
    left part is integrated in the variable s = sqrt(z) (which removes the
    singularity), the right part is truncated where the tail is negligible.
    """
    if inp.tau == 0.0:
        raise DomainError("jump-operator integral is undefined at tau = 0")
    if nu.is_zero:
        return 0.0, 0.0

    def integrand(z):
        return op_L_z(z, inp, rho) * nu.density(z)

    left, left_err = quad(
        lambda s: 2.0 * s * integrand(s * s), 0.0, 1.0, epsabs=0.5 * tol, epsrel=1e-11, limit=200
    )
    right, right_err = quad(
        integrand, 1.0, _tail_cutoff(nu), epsabs=0.5 * tol, epsrel=1e-11, limit=200
    )
    err = left_err + right_err
    if err > tol:
        raise QuadratureError(
            f"jump-operator integral reached {err:.3e}, requested {tol:.3e}", achieved=err
        )
    return left + right, err

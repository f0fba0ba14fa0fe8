"""Model parameterization and exact-conditional simulation of the terminal state.

The squared volatility is a subordinator-driven OU process; conditionally on
the jump path the log price is Gaussian, so a terminal sample needs only the
jump times/sizes on (t, T], the integrated variance they induce, and one
normal draw. GAMMA_OU jumps are compound Poisson (rate lam*a, exponential(b)
marks). IG_OU has infinite activity and is sampled as the exact sum of

* a compound-Poisson component with rate lam*a*b/2 and Gamma(1/2, b^2/2)
  marks (normal(0,1)^2 / b^2),
* a tempered 1/2-stable series for jumps above a truncation level delta
  (explicit inverse tail, exponential tempering by rejection),
* the neglected sub-delta mass, compensated exactly by its mean drift in
  the squared volatility, the integrated variance and the jump sum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from . import _kernels
from .blackscholes import norm_cdf
from .errors import DomainError
from .levy import LevyMeasure, MeasureFamily, epsilon, validate_assumptions

__all__ = ["BnsParams", "MarketState", "TerminalSamples", "epsilon", "simulate_terminal", "mc_call_price"]

_SQRT_PI = math.sqrt(math.pi)

# default expected tempered-stable candidates per path; the truncation level
# adapts so this stays flat in tau (see _ig_truncation)
DEFAULT_IG_CANDIDATES = 128.0


@dataclass(frozen=True)
class BnsParams:
    """Full model parameterization.

    The martingale drift mu is never stored: it is always recomputed from
    (nu, rho). Construction warns (rather than fails) when the measure
    violates an integrability assumption over [0, horizon], since prices
    remain well defined there.
    """

    rho: float
    lam: float
    nu: LevyMeasure
    sigma0_sq: float
    s0: float
    rate: float
    horizon: float

    def __post_init__(self):
        if self.rho >= 0.0:
            raise DomainError(f"leverage rho must be strictly negative, got {self.rho}")
        if self.lam != self.nu.lam:
            raise DomainError(
                f"mean-reversion speed mismatch: params {self.lam} vs measure {self.nu.lam}"
            )
        if self.sigma0_sq <= 0.0:
            raise DomainError(f"sigma0_sq must be > 0, got {self.sigma0_sq}")
        if self.s0 <= 0.0:
            raise DomainError(f"s0 must be > 0, got {self.s0}")
        if self.rate < 0.0:
            raise DomainError(f"rate must be >= 0, got {self.rate}")
        if self.horizon <= 0.0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        report = validate_assumptions(self.nu, self.rho, self.horizon)
        if not report.ok:
            warnings.warn(
                f"jump measure violates standing assumptions over [0, {self.horizon}]: "
                f"{', '.join(report.failures)}",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def mu(self) -> float:
        """Martingale drift of the discounted price."""
        return self.nu.drift_mu(self.rho)

    @property
    def x0(self) -> float:
        return math.log(self.s0)


@dataclass(frozen=True)
class MarketState:
    """Pricing context: current time, log price, squared volatility, strike."""

    t: float
    x: float
    sigma_t_sq: float
    strike: float

    def __post_init__(self):
        if self.t < 0.0:
            raise DomainError(f"t must be >= 0, got {self.t}")
        if self.sigma_t_sq <= 0.0:
            raise DomainError(f"sigma_t_sq must be > 0, got {self.sigma_t_sq}")
        if self.strike <= 0.0:
            raise DomainError(f"strike must be > 0, got {self.strike}")

    @classmethod
    def from_spot(cls, spot: float, sigma_t_sq: float, strike: float, t: float = 0.0) -> "MarketState":
        return cls(t=t, x=math.log(spot), sigma_t_sq=sigma_t_sq, strike=strike)

    def moneyness(self) -> float:
        return self.x - math.log(self.strike)


class TerminalSamples(NamedTuple):
    """Per-path terminal draws: log price, squared volatility, integrated
    variance over (t, T], total jump mass (compensation included) and the
    number of sampled jumps."""

    x: np.ndarray
    sigma_sq: np.ndarray
    integrated_var: np.ndarray
    jump_sum: np.ndarray
    jump_count: np.ndarray


def _ig_truncation(nu: LevyMeasure, tau: float, candidates: float, mean_rule: bool) -> float:
    # series candidates above delta arrive at rate 2*c0/sqrt(delta); the
    # default pins their expected count, the mean rule pins the neglected
    # mean mass below 1e-6 * first_moment * tau instead
    if mean_rule:
        delta = (1e-6 * nu.first_moment() * tau / (2.0 * nu.c0)) ** 2
    else:
        delta = (2.0 * nu.c0 * tau / candidates) ** 2
    return min(delta, 1e-6)


def _neglected_mean(nu: LevyMeasure, delta: float) -> float:
    # integral of z * c0 z^-3/2 exp(-c2 z) over (0, delta)
    return nu.c0 * _SQRT_PI * erf(math.sqrt(nu.c2 * delta)) / math.sqrt(nu.c2)


def simulate_terminal(
    params: BnsParams,
    state: MarketState,
    n_paths: int,
    seed: int,
    ig_candidates_per_path: float = DEFAULT_IG_CANDIDATES,
    small_jump_mean_rule: bool = False,
    block_size: int = 8192,
) -> TerminalSamples:
    """Exact-conditional terminal samples of (X_T, Sigma_T^2, IV).

    Deterministic for fixed (seed, n_paths) and independent of any execution
    parallelism: counter-based Philox substreams are spawned per fixed-size
    path block, and each block's draws are consumed in a fixed order.
    """
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    tau = params.horizon - state.t
    if tau <= 0.0:
        raise DomainError(f"terminal simulation needs t < horizon, got tau = {tau}")
    nu = params.nu
    lam, rho = params.lam, params.rho
    eps_tau = epsilon(lam, tau)

    acc_sig = np.zeros(n_paths)
    acc_iv = np.zeros(n_paths)
    acc_jsum = np.zeros(n_paths)
    acc_cnt = np.zeros(n_paths, dtype=np.int64)
    gauss = np.empty(n_paths)

    if nu.is_zero:
        kinds = ()
    elif nu.kind is MeasureFamily.IG_OU:
        delta = _ig_truncation(nu, tau, ig_candidates_per_path, small_jump_mean_rule)
        stable_rate = 2.0 * nu.c0 / math.sqrt(delta)
        cp_rate = 0.5 * nu.lam * nu.a * nu.b
        m_neg = _neglected_mean(nu, delta)
        kinds = ("stable", "cp")
    else:
        cp_rate = nu.lam * nu.a
        m_neg = 0.0
        kinds = ("cp",)

    root = np.random.SeedSequence(seed)
    n_blocks = (n_paths + block_size - 1) // block_size
    children = root.spawn(n_blocks)
    for blk, child in enumerate(children):
        lo = blk * block_size
        hi = min(lo + block_size, n_paths)
        nblk = hi - lo
        rng = np.random.Generator(np.random.Philox(child))
        if "stable" in kinds:
            counts = rng.poisson(stable_rate * tau, nblk)
            total = int(counts.sum())
            u = rng.random(total) * tau
            v = rng.random(total)
            w = rng.random(total)
            _kernels.accumulate_ig_candidates(
                counts, u, v, w, delta, nu.c2, lam, tau,
                acc_sig[lo:hi], acc_iv[lo:hi], acc_jsum[lo:hi], acc_cnt[lo:hi],
            )
        if "cp" in kinds:
            counts = rng.poisson(cp_rate * tau, nblk)
            total = int(counts.sum())
            u = rng.random(total) * tau
            if nu.kind is MeasureFamily.IG_OU:
                g = rng.standard_normal(total)
                z = (g / nu.b) ** 2
            else:
                z = rng.exponential(1.0 / nu.b, total)
            _kernels.accumulate_jumps(
                counts, u, z, lam, tau,
                acc_sig[lo:hi], acc_iv[lo:hi], acc_jsum[lo:hi], acc_cnt[lo:hi],
            )
        gauss[lo:hi] = rng.standard_normal(nblk)

    sigma_sq = math.exp(-lam * tau) * state.sigma_t_sq + acc_sig
    iv = eps_tau * state.sigma_t_sq + acc_iv
    jump_sum = acc_jsum
    if kinds and m_neg > 0.0:
        sigma_sq = sigma_sq + m_neg * eps_tau
        iv = iv + m_neg * (tau - eps_tau) / lam
        jump_sum = jump_sum + m_neg * tau

    x_term = state.x + (params.rate + params.mu) * tau - 0.5 * iv + np.sqrt(iv) * gauss + rho * jump_sum
    return TerminalSamples(
        x=x_term, sigma_sq=sigma_sq, integrated_var=iv, jump_sum=jump_sum, jump_count=acc_cnt
    )


def mc_call_price(
    params: BnsParams,
    state: MarketState,
    n_paths: int,
    seed: int,
    method: str = "conditional",
    **sim_kwargs,
):
    """Discounted Monte Carlo call price with its standard error.

    ``conditional`` (default) integrates the Gaussian factor analytically
    given each jump path, which is unbiased by the tower property and has
    much lower variance; ``payoff`` averages the raw discounted payoff.
    """
    if n_paths < 100:
        raise DomainError(f"n_paths must be >= 100, got {n_paths}")
    if method not in ("conditional", "payoff"):
        raise DomainError(f"unknown estimator {method!r}")
    tau = params.horizon - state.t
    sim = simulate_terminal(params, state, n_paths, seed, **sim_kwargs)
    disc = math.exp(-params.rate * tau)
    log_k = math.log(state.strike)
    if method == "payoff":
        values = disc * np.maximum(np.exp(sim.x) - state.strike, 0.0)
    else:
        iv = sim.integrated_var
        mean_c = state.x + (params.rate + params.mu) * tau - 0.5 * iv + params.rho * sim.jump_sum
        rt_iv = np.sqrt(iv)
        d1 = (mean_c - log_k + iv) / rt_iv
        values = disc * (
            np.exp(mean_c + 0.5 * iv) * norm_cdf(d1) - state.strike * norm_cdf(d1 - rt_iv)
        )
    price = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.inf
    return price, se

"""Call option pricing for a subordinator-driven OU stochastic volatility
model: short-maturity closed-form approximations, an FFT reference pricer,
an exact-conditional Monte Carlo pricer, and error-study experiment runners.
"""

__version__ = "0.1.0"

from .approximator import (  # noqa: F401
    ApproxResult,
    CorrectionInputs,
    Formula,
    Regime,
    additional_term_oracle,
    approx_v1,
    approx_v2,
    approx_v3,
    bs_primal,
    classify_regime,
    correction_atm_itm,
    correction_itm,
)
from .blackscholes import (  # noqa: F401
    BsInputs,
    bs_delta_x,
    bs_dsigma2,
    bs_price,
    d_plus_minus,
    d_plus_minus_shifted,
    op_delta,
    op_L_z,
    op_Lbar,
)
from .bns_model import (  # noqa: F401
    BnsParams,
    MarketState,
    TerminalSamples,
    epsilon,
    mc_call_price,
    simulate_terminal,
)
from .errors import (  # noqa: F401
    DegenerateFitError,
    DomainError,
    OracleDisagreementError,
    PricingError,
    QuadratureError,
    RegimeError,
    StripError,
    UnsupportedMeasureError,
)
from .levy import (  # noqa: F401
    AssumptionReport,
    LevyMeasure,
    MeasureFamily,
    gamma1,
    gamma3,
    gamma_upper,
    validate_assumptions,
)
from .reference import CfGrid, PriceCurve, RefPrice, char_fn, fft_call_prices, reference_price  # noqa: F401

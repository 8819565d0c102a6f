"""Small-cost expansion of the exponential-utility portfolio problem with quadratic trading costs."""

from .expansion import (
    ExpansionTerms,
    c_of_s,
    expansion_terms,
    g0,
    g1,
    g1_xi,
    g2_xi,
    g_approx,
    value_approx,
)
from .merton import merton_solution, merton_value
from .model import (
    ConfigError,
    DomainError,
    MarketState,
    ModelParams,
    Regime,
    RegimeKind,
    classify_regime,
    merton_line_xi,
    validate_params,
)
from .simulator import (
    McEstimate,
    SimConfig,
    SimPath,
    estimate_R,
    estimate_g_hat,
    path_stats,
    simulate_merton_benchmark,
    simulate_path,
    simulate_paths,
)
from .strategy import Strategy, StrategyKind, control_corrected, control_leading

__version__ = "0.1.0"

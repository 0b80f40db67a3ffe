"""Energy-harvesting IoT downlink analysis at desk scale.

Monte Carlo estimation and analytic bounding of the joint success
probability (harvested energy and SIR both over threshold in one slot),
slot-level age-of-information simulation with closed-form peak-age means,
and search for the optimal slot-partitioning factor.
"""

__version__ = "0.1.0"

from .aoi import (
    PaoiStats,
    QueueParams,
    QueueTrace,
    paoi_np_closed_form,
    paoi_p_closed_form,
    residual_pmf,
    simulate_queue,
)
from .geometry import DiscPpp, pdf_farthest, pdf_nearest, pmf_count, sample_realization
from .jsp import JspEstimate, jsp_lower_bound, jsp_monte_carlo, jsp_upper_bound, select_regime
from .model import (
    HarvesterModel,
    NetworkConfig,
    NetworkRealization,
    harvested_energy,
    sir,
    sir_threshold,
)
from .optimizer import XiObjective, XiOptimum, evaluate_objective, optimize_xi
from .quadrature import QuadratureSpec, erlang_lower, erlang_upper, integrate_adaptive, poisson_series

__all__ = [
    "__version__",
    "NetworkConfig",
    "HarvesterModel",
    "NetworkRealization",
    "harvested_energy",
    "sir",
    "sir_threshold",
    "DiscPpp",
    "sample_realization",
    "pdf_nearest",
    "pdf_farthest",
    "pmf_count",
    "QuadratureSpec",
    "erlang_lower",
    "erlang_upper",
    "integrate_adaptive",
    "poisson_series",
    "JspEstimate",
    "jsp_monte_carlo",
    "jsp_lower_bound",
    "jsp_upper_bound",
    "select_regime",
    "QueueParams",
    "QueueTrace",
    "PaoiStats",
    "simulate_queue",
    "paoi_np_closed_form",
    "paoi_p_closed_form",
    "residual_pmf",
    "XiObjective",
    "XiOptimum",
    "evaluate_objective",
    "optimize_xi",
]

from importlib.metadata import version

from irssop.analytics import (
    bob_snr_params,
    eve_snr_params,
    optimal_k,
    sop_analytic,
    sop_exact,
    sop_lower_bound,
    sop_series_meijerg,
)
from irssop.config import ExperimentSpec, McConfig, SystemParams, load_config
from irssop.engine import estimate_snr_stats, estimate_sop
from irssop.experiments import run_experiment, write_results
from irssop.misc.debug_versions import display_debug_info
from irssop.transceiver import SCENARIOS, Scenario

try:
    __version__ = version(__name__)
except ImportError:
    __version__ = "unknown"

__all__ = [
    "SCENARIOS",
    "ExperimentSpec",
    "McConfig",
    "Scenario",
    "SystemParams",
    "__version__",
    "bob_snr_params",
    "display_debug_info",
    "estimate_snr_stats",
    "estimate_sop",
    "eve_snr_params",
    "load_config",
    "optimal_k",
    "run_experiment",
    "sop_analytic",
    "sop_exact",
    "sop_lower_bound",
    "sop_series_meijerg",
    "write_results",
]

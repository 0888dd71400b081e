"""Simulation and analysis of Bell-type experiments as cyclic systems.

Raw two-wing click streams are generated under local hidden-variable
models, turned into paired outcomes with fixed coincidence windows, and
analysed with cyclic noncontextuality inequalities corrected for
context-dependent marginals.
"""

__version__ = "0.1.0"

from .errors import CbdError
from .inequalities import (
    CbdStatistics,
    cbd_statistics,
    coupled_cycle_check,
    coupling_range,
    marginal_delta,
    max_coupling,
    nci_check,
    odd_sign_vectors,
    s_odd,
    s_odd_bruteforce,
)
from .model import (
    Context,
    ContextCounts,
    CyclicSystemSpec,
    ExpectationTable,
    cyclic_spec,
    eprb_spec,
    validate_table,
)
from .pairing import (
    PairedSample,
    WindowedSample,
    coincidence_pair,
    estimate_table,
    nosignaling_check,
    optimal_window,
    scan,
    window_filter,
)
from .simulator import ModelConfig, TimeTaggedStream, analytic_correlation, simulate_run
from .stats import Interval, VerdictReport, assess, s_interval, verdict

__all__ = [
    "CbdError", "CbdStatistics", "cbd_statistics", "coupled_cycle_check", "coupling_range",
    "marginal_delta", "max_coupling", "nci_check", "odd_sign_vectors", "s_odd", "s_odd_bruteforce",
    "Context", "ContextCounts", "CyclicSystemSpec", "ExpectationTable", "cyclic_spec", "eprb_spec",
    "validate_table", "PairedSample", "WindowedSample", "coincidence_pair", "estimate_table",
    "nosignaling_check", "optimal_window", "scan", "window_filter", "ModelConfig",
    "TimeTaggedStream", "analytic_correlation", "simulate_run", "Interval", "VerdictReport",
    "assess", "s_interval", "verdict",
]

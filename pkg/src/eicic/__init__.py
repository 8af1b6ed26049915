"""Joint ABS / cell-association optimization for LTE macro-pico networks."""

from eicic.model import (
    Allocation,
    CellId,
    ConvergenceParams,
    DualState,
    NetworkInstance,
    PrimalState,
    UeRecord,
    check_feasibility,
    lagrangian,
    utility,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "CellId",
    "ConvergenceParams",
    "DualState",
    "NetworkInstance",
    "PrimalState",
    "UeRecord",
    "check_feasibility",
    "lagrangian",
    "utility",
]

"""Random-choice solver for spherically symmetric gas outflow with gravity and heating."""

from .euler import ConservedState, GasConstants, HeatProfile, PrimitiveState

__all__ = ["ConservedState", "GasConstants", "HeatProfile", "PrimitiveState"]

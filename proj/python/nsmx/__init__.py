"""Python surface of the spectral magnetofluid simulator.

The heavy lifting lives in the compiled extension; this package re-exports
its types and operations.
"""

from ._core import (
    Box,
    Field,
    State,
    cross,
    curl,
    hadamard,
    initial_state,
    inner_l2,
    leray_project,
    magnetic_helicity,
    simulate_json,
    solve_ohm,
    truncate,
    vector_potential,
)

__all__ = [
    "Box",
    "Field",
    "State",
    "cross",
    "curl",
    "hadamard",
    "initial_state",
    "inner_l2",
    "leray_project",
    "magnetic_helicity",
    "simulate_json",
    "solve_ohm",
    "truncate",
    "vector_potential",
]

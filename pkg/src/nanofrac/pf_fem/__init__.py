"""Plane-strain phase-field fracture solver on bilinear quad meshes."""

from .assembly import (
    BoundaryCondition,
    Discretisation,
    PFMaterial,
    SolutionState,
    assemble_block_tangent,
    assemble_residual,
    element_energy_density,
    elastic_energy,
    plane_strain_reduce,
    regularised_surface_energy,
    update_history,
)
from .mesh import Mesh, graded_line, mirrored_line, tensor_grid
from .solver import (
    LoadCurve,
    LoadSchedule,
    SimulationProblem,
    SimulationResult,
    Snapshot,
    SolverConfig,
    reaction_force,
    run_simulation,
    solve_step,
)

__all__ = [
    "BoundaryCondition",
    "Discretisation",
    "PFMaterial",
    "SolutionState",
    "assemble_block_tangent",
    "assemble_residual",
    "element_energy_density",
    "elastic_energy",
    "plane_strain_reduce",
    "regularised_surface_energy",
    "update_history",
    "Mesh",
    "graded_line",
    "mirrored_line",
    "tensor_grid",
    "LoadCurve",
    "LoadSchedule",
    "SimulationProblem",
    "SimulationResult",
    "Snapshot",
    "SolverConfig",
    "reaction_force",
    "run_simulation",
    "solve_step",
]

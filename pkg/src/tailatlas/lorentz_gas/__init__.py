"""Periodic Lorentz gas and Lorentz tube with a discrete displacement cocycle."""

from .config import (PLANE, PRESETS, TUBE, LorentzConfig, Scatterer, finite_horizon_square,
                     finite_horizon_tube, hard_wall_tube, infinite_horizon_square, preset)
from .ensemble import CSV_COLUMNS, EnsembleStats, checkpoint_schedule, run_ensemble, trajectory_rng
from .geometry import (FLOAT, CollisionEvent, LineElement, MPBackend, billiard_step, line_element,
                       next_collision, reflect, retrace_step, reversal_defect, reverse,
                       sample_invariant_measure, trajectory)

__all__ = [
    "PLANE", "TUBE", "PRESETS", "LorentzConfig", "Scatterer", "preset", "finite_horizon_square",
    "finite_horizon_tube", "hard_wall_tube", "infinite_horizon_square", "EnsembleStats",
    "run_ensemble", "checkpoint_schedule", "trajectory_rng", "CSV_COLUMNS", "FLOAT", "MPBackend",
    "LineElement", "CollisionEvent", "next_collision", "reflect", "billiard_step", "line_element",
    "sample_invariant_measure", "reverse", "retrace_step", "reversal_defect", "trajectory",
]

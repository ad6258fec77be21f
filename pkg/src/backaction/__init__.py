"""Measurement backaction of a spin-1 condensate magnetometer on a magnetised membrane.

The membrane is a harmonic oscillator; each stroboscopic F_y measurement of the
condensate conditions the membrane state.  Two closed-form engines (thermal and
coherent initial membrane states) are cross-checked against a truncated-Fock
oracle.
"""

from .coherent import CoherentBranch, CoherentInit, evolve_coherent, negativity_scan, wigner_coherent
from .functionals import MeasurementSchedule, PathFunctionals, path_functionals, recurrence_step, t_accum
from .grid import GridSpec, WignerGrid
from .params import PAPER_PARAMS, DerivedParams, ExperimentParams, PhysicalConstants, derive_params
from .spin1 import fy_projector, initial_bec_density, prepare_pi_half, spin_operators
from .thermal import CapExceeded, outcome_probability, wigner_post, wigner_thermal

__all__ = [
    "CapExceeded",
    "CoherentBranch",
    "CoherentInit",
    "DerivedParams",
    "ExperimentParams",
    "GridSpec",
    "MeasurementSchedule",
    "PAPER_PARAMS",
    "PathFunctionals",
    "PhysicalConstants",
    "WignerGrid",
    "derive_params",
    "evolve_coherent",
    "fy_projector",
    "initial_bec_density",
    "negativity_scan",
    "outcome_probability",
    "path_functionals",
    "prepare_pi_half",
    "recurrence_step",
    "spin_operators",
    "t_accum",
    "wigner_coherent",
    "wigner_post",
    "wigner_thermal",
]

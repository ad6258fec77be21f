"""Small readout utilities: phase-contrast signal and field-to-position conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields


@dataclass(frozen=True)
class PhaseContrastInput:
    """Inputs of the dispersive phase-contrast signal.

    ``pc_a0, pc_a1, pc_a2`` are the detuning-dependent coefficients of the
    signal expansion in F_y (named to avoid clashing with coherent amplitudes).
    """

    n_col: float  # column density, 1/m^2
    sigma0: float  # resonant cross-section, m^2
    gamma_over_2Delta: float
    pc_a0: float
    pc_a1: float
    pc_a2: float
    Fy_mean: float
    Fy2_mean: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"{f.name} must be finite")
        if self.gamma_over_2Delta < 0:
            raise ValueError("gamma_over_2Delta must be non-negative")


def phase_contrast_signal(inp: PhaseContrastInput) -> float:
    """s = 1 + 2 n sigma0 (gamma / 2 Delta) (a0 + a1 <F_y> + a2 <F_y^2>)."""
    bracket = inp.pc_a0 + inp.pc_a1 * inp.Fy_mean + inp.pc_a2 * inp.Fy2_mean
    return 1.0 + 2.0 * inp.n_col * inp.sigma0 * inp.gamma_over_2Delta * bracket


def field_to_position_sensitivity(dB: float, gradient: float) -> float:
    """Magnetometer sensitivity (T/sqrt(Hz)) to membrane position sensitivity (m/sqrt(Hz))."""
    if not gradient > 0:
        raise ValueError("field gradient must be positive")
    if not dB >= 0:
        raise ValueError("field sensitivity must be non-negative")
    return dB / gradient

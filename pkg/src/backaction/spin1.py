"""Spin-1 operators, state preparation and F_y projectors in the F_z basis.

Row/column order is (+1, 0, -1).  Eigenvectors are fixed to have their first
nonzero component real and positive so tabulated amplitudes are reproducible.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SPIN_VALUES = (1, 0, -1)
_R2 = np.sqrt(2.0)


def spin_index(value: int) -> int:
    """Row index of the F_z eigenvalue ``value``."""
    if value not in SPIN_VALUES:
        raise ValueError(f"spin-1 label must be one of {SPIN_VALUES}, got {value!r}")
    return 1 - value


@lru_cache(maxsize=None)
def _ops():
    fx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _R2
    fy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _R2
    fz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    for m in (fx, fy, fz):
        m.flags.writeable = False
    return fx, fy, fz


def spin_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(F_x, F_y, F_z) with hbar = 1."""
    return tuple(m.copy() for m in _ops())


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return v * (abs(v[k]) / v[k])


def eigenstate(op: np.ndarray, value: int) -> np.ndarray:
    """Normalized eigenvector of a spin-1 operator with eigenvalue ``value``."""
    w, v = np.linalg.eigh(op)
    k = int(np.argmin(np.abs(w - value)))
    if abs(w[k] - value) > 1e-10:
        raise ValueError(f"{value} is not an eigenvalue")
    return _fix_phase(v[:, k])


def prepare_pi_half() -> np.ndarray:
    """|F_x = +1> written in the F_z basis (the state after the pi/2 pulse)."""
    return eigenstate(_ops()[0], 1)


def fy_projector(gamma: int) -> np.ndarray:
    """Projector |F_y = gamma><F_y = gamma|."""
    spin_index(gamma)
    v = eigenstate(_ops()[1], gamma)
    return np.outer(v, v.conj())


def initial_bec_density() -> np.ndarray:
    c = prepare_pi_half()
    return np.outer(c, c.conj())


def as_kraus(label) -> np.ndarray:
    """Kraus matrix for an F_y outcome label or a user-supplied 3x3 matrix."""
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return fy_projector(int(label))
    m = np.asarray(label, dtype=complex)
    if m.shape != (3, 3):
        raise ValueError("a Kraus operator must be an F_y label or a 3x3 matrix")
    return m

"""Measurement schedules and the per-path displacement functionals X, P, phi.

A spin path ``sigma = (sigma_1, ..., sigma_n)`` lists the F_z value carried
during each free-evolution interval; ``sigma_0 = 0`` is implicit.  Paths are
enumerated lexicographically over (+1, 0, -1).
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .spin1 import SPIN_VALUES, as_kraus


class SingularStep(ArithmeticError):
    """The cot/csc form of the phi update is singular (sin(omega t) == 0)."""


@dataclass(frozen=True)
class MeasurementSchedule:
    """Ordered (interval, Kraus) pairs.

    ``intervals`` are the times between successive measurements in seconds,
    ``kraus`` holds an F_y outcome label or a 3x3 matrix per measurement.
    """

    intervals: tuple[float, ...]
    kraus: tuple
    omega_m: float

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(float(t) for t in self.intervals))
        object.__setattr__(self, "kraus", tuple(self.kraus))
        if len(self.intervals) < 1:
            raise ValueError("a schedule needs at least one measurement")
        if len(self.kraus) != len(self.intervals):
            raise ValueError("one Kraus entry is needed per interval")
        if not all(math.isfinite(t) and t > 0 for t in self.intervals):
            raise ValueError("measurement intervals must be positive")
        if not self.omega_m > 0:
            raise ValueError("omega_m must be positive")
        for k in self.kraus:
            as_kraus(k)

    @classmethod
    def from_angles(cls, angles: Sequence[float], kraus: Sequence, omega_m: float = 1.0):
        """Build from phase angles ``omega_m * t_i`` instead of seconds."""
        return cls(tuple(float(a) / omega_m for a in angles), tuple(kraus), omega_m)

    @classmethod
    def in_half_periods(cls, fractions: Sequence[float], kraus: Sequence, omega_m: float = 1.0):
        """Intervals given in units of pi/omega_m."""
        return cls.from_angles([math.pi * f for f in fractions], kraus, omega_m)

    @property
    def n(self) -> int:
        return len(self.intervals)

    @property
    def angles(self) -> np.ndarray:
        return self.omega_m * np.asarray(self.intervals)

    def kraus_matrices(self) -> list[np.ndarray]:
        return [as_kraus(k) for k in self.kraus]

    def with_kraus(self, kraus: Sequence) -> "MeasurementSchedule":
        return MeasurementSchedule(self.intervals, tuple(kraus), self.omega_m)

    def prefix(self, m: int) -> "MeasurementSchedule":
        return MeasurementSchedule(self.intervals[:m], self.kraus[:m], self.omega_m)


@dataclass(frozen=True)
class PathFunctionals:
    X: float
    P: float
    phi: float


def _angles(schedule) -> np.ndarray:
    if isinstance(schedule, MeasurementSchedule):
        return schedule.angles
    return np.asarray(schedule, dtype=float)


def t_accum(schedule, i: int, j: int) -> float:
    """Accumulated phase omega_m * (t_i + ... + t_j), zero when i > j (1-based)."""
    th = _angles(schedule)
    n = len(th)
    if i < 1 or j > n:
        raise IndexError(f"indices must satisfy 1 <= i and j <= {n}")
    if i > j:
        return 0.0
    return float(np.sum(th[i - 1 : j]))


def enumerate_paths(n: int) -> np.ndarray:
    """All 3**n spin paths as an int array of shape (3**n, n)."""
    if n < 1:
        raise ValueError("n must be positive")
    return np.array(list(itertools.product(SPIN_VALUES, repeat=n)), dtype=np.int8).reshape(-1, n)


def tail_phases(angles) -> np.ndarray:
    """T_{i,n} for i = 1..n."""
    th = np.asarray(angles, dtype=float)
    return np.cumsum(th[::-1])[::-1]


def functionals_array(angles, paths) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form X, P, phi for every row of ``paths``."""
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    T = tail_phases(angles)
    c, s = np.cos(T), np.sin(T)
    prev = np.concatenate([np.zeros((paths.shape[0], 1)), paths[:, :-1]], axis=1)
    d = paths - prev
    dc, ds = d * c, d * s
    X = paths[:, -1] - dc.sum(axis=1)
    P = ds.sum(axis=1)
    # cross terms i < j: sum_j d_j sin T_j * (sum_{i<j} d_i cos T_i)
    earlier = np.cumsum(dc, axis=1) - dc
    phi = (d * d * s * c).sum(axis=1) + 2.0 * (ds * earlier).sum(axis=1)
    return X, P, phi


def path_functionals(schedule, path: Sequence[int]) -> PathFunctionals:
    th = _angles(schedule)
    if len(path) != len(th):
        raise ValueError("path length must equal the number of intervals")
    X, P, phi = functionals_array(th, [path])
    return PathFunctionals(float(X[0]), float(P[0]), float(phi[0]))


def recurrence_step(prev: PathFunctionals, sigma_n: int, omega_t: float) -> PathFunctionals:
    """Advance X, P, phi by one interval spent in spin sector ``sigma_n``.

    The phi update is the harmonic-oscillator action written with positions
    measured from the sector centre; it needs sin(omega_t) != 0.
    """
    c, s = math.cos(omega_t), math.sin(omega_t)
    X = prev.X * c + prev.P * s + sigma_n * (1 - c)
    P = prev.P * c - prev.X * s + sigma_n * s
    if s == 0.0:
        raise SingularStep(f"sin({omega_t}) == 0")
    y0, y1 = prev.X - sigma_n, X - sigma_n
    phi = prev.phi - ((y1 * y1 + y0 * y0) * c - 2 * y1 * y0) / s
    return PathFunctionals(X, P, phi)


def iterate_recurrence(schedule, path: Sequence[int]) -> PathFunctionals:
    f = PathFunctionals(0.0, 0.0, 0.0)
    for th, sig in zip(_angles(schedule), path):
        f = recurrence_step(f, int(sig), float(th))
    return f


def dump_functionals_csv(schedule, path_file) -> Path:
    """Write per-path (path, X, P, phi) rows for debugging."""
    th = _angles(schedule)
    paths = enumerate_paths(len(th))
    X, P, phi = functionals_array(th, paths)
    path_file = Path(path_file)
    with path_file.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "X", "P", "phi"])
        for row, x, p, f in zip(paths, X, P, phi):
            w.writerow([" ".join(f"{int(v):+d}" for v in row), repr(float(x)), repr(float(p)), repr(float(f))])
    return path_file


@dataclass(frozen=True)
class PathTable:
    """Everything the engines need per spin path, for one schedule.

    ``chain[g, p]`` is the matrix element M^(n)_{g, s_n} ... M^(1)_{s_2, s_1}
    of the Kraus product along path ``p``; ``dyn_phase[p]`` is the spin
    dynamical phase sum_i omega_m t_i (larmor * s_i - delta * s_i**2).
    """

    paths: np.ndarray
    X: np.ndarray
    P: np.ndarray
    phi: np.ndarray
    chain: np.ndarray
    dyn_phase: np.ndarray
    angles: np.ndarray

    @property
    def first_index(self) -> np.ndarray:
        return 1 - self.paths[:, 0].astype(int)


def kraus_chain(kraus: Sequence[np.ndarray], paths: np.ndarray) -> np.ndarray:
    idx = 1 - np.asarray(paths, dtype=int)
    n = idx.shape[1]
    w = np.ones(idx.shape[0], dtype=complex)
    for i in range(n - 1):
        w = w * kraus[i][idx[:, i + 1], idx[:, i]]
    return kraus[n - 1][:, idx[:, n - 1]] * w[None, :]


def build_path_table(angles, kraus: Sequence[np.ndarray], larmor: float, delta: float) -> PathTable:
    th = np.asarray(angles, dtype=float)
    paths = enumerate_paths(len(th))
    X, P, phi = functionals_array(th, paths)
    sp = paths.astype(float)
    dyn = (th[None, :] * (larmor * sp - delta * sp * sp)).sum(axis=1)
    return PathTable(paths, X, P, phi, kraus_chain(kraus, paths), dyn, th)

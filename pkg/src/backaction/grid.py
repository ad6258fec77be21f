"""Phase-space grids and their on-disk format.

Values are stored in oscillator units: ``q = x / x_zp`` and
``k = p / (m omega_m x_zp)``, so a vacuum state is
``exp(-(q**2 + k**2) / 2) / (2 pi)``.  SI views are derived properties.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    q_min: float
    q_max: float
    k_min: float
    k_max: float
    nq: int = 201
    nk: int = 201

    def __post_init__(self):
        if self.nq < 2 or self.nk < 2:
            raise ValueError("grid needs at least two points per axis")
        if not (self.q_max > self.q_min and self.k_max > self.k_min):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def centered(cls, qc: float, kc: float, half_q: float, half_k: float | None = None, nq=201, nk=201):
        half_k = half_q if half_k is None else half_k
        return cls(qc - half_q, qc + half_q, kc - half_k, kc + half_k, nq, nk)

    @property
    def q(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.nq)

    @property
    def k(self) -> np.ndarray:
        return np.linspace(self.k_min, self.k_max, self.nk)

    def with_shape(self, nq: int, nk: int) -> "GridSpec":
        return GridSpec(self.q_min, self.q_max, self.k_min, self.k_max, nq, nk)


@dataclass
class WignerGrid:
    q: np.ndarray
    k: np.ndarray
    values: np.ndarray  # shape (len(q), len(k))
    x_zp: float = 1.0
    p_zp: float = 1.0
    imag_residue: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def dq(self) -> float:
        return float(self.q[1] - self.q[0])

    @property
    def dk(self) -> float:
        return float(self.k[1] - self.k[0])

    @property
    def x_axis(self) -> np.ndarray:
        return self.q * self.x_zp

    @property
    def p_axis(self) -> np.ndarray:
        return self.k * self.p_zp

    @property
    def values_si(self) -> np.ndarray:
        return self.values / (self.x_zp * self.p_zp)

    @property
    def norm_estimate(self) -> float:
        return float(self.values.sum() * self.dq * self.dk)

    def purity(self) -> float:
        """2 pi hbar times the integral of W**2 (1 for a pure state)."""
        return float(4 * math.pi * (self.values**2).sum() * self.dq * self.dk)

    def moments(self) -> dict:
        w = self.values * self.dq * self.dk
        n = w.sum()
        mq = float((w.sum(axis=1) @ self.q) / n)
        mk = float((w.sum(axis=0) @ self.k) / n)
        vq = float((w.sum(axis=1) @ (self.q - mq) ** 2) / n)
        vk = float((w.sum(axis=0) @ (self.k - mk) ** 2) / n)
        return {"mean_q": mq, "mean_k": mk, "var_q": vq, "var_k": vk}

    def min(self) -> float:
        return float(self.values.min())

    def to_csv(self, path) -> Path:
        """Columns x (m), p (kg m/s), w (SI); p is the slow index."""
        path = Path(path)
        xs, ps, vs = self.x_axis, self.p_axis, self.values_si
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["x", "p", "w"])
            for j, p in enumerate(ps):
                for i, x in enumerate(xs):
                    wr.writerow([repr(float(x)), repr(float(p)), repr(float(vs[i, j]))])
        return path

    def sidecar(self, **extra) -> dict:
        out = {
            "nq": len(self.q),
            "nk": len(self.k),
            "x_zp": self.x_zp,
            "p_zp": self.p_zp,
            "norm_estimate": self.norm_estimate,
            "imag_residue": self.imag_residue,
        }
        out.update(self.meta)
        out.update(extra)
        return out

    def write(self, stem, **extra) -> tuple[Path, Path]:
        stem = Path(stem)
        csv_path = self.to_csv(stem.with_suffix(".csv"))
        json_path = stem.with_suffix(".json")
        json_path.write_text(json.dumps(self.sidecar(**extra), indent=2, sort_keys=True, default=_jsonable))
        return csv_path, json_path

    @classmethod
    def read_csv(cls, path, x_zp: float = 1.0, p_zp: float = 1.0) -> "WignerGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        xs = np.unique(data[:, 0])
        ps = np.unique(data[:, 1])
        vals = data[:, 2].reshape(len(ps), len(xs)).T
        return cls(xs / x_zp, ps / p_zp, vals * x_zp * p_zp, x_zp, p_zp)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")

"""Physical constants, experiment parameters and derived scalars.

Everything downstream of :func:`derive_params` works in oscillator units:
lengths in ``x_zp``, momenta in ``m * omega_m * x_zp`` and times as phase
angles ``omega_m * t``.  In these units ``[q, k] = 2i``.
"""

from __future__ import annotations

import json
import math
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar
    k_B: float = _sc.k
    mu_B: float = _sc.physical_constants["Bohr magneton"][0]
    mu0_over_4pi: float = 1e-7

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"constant {f.name} must be finite and positive, got {v!r}")


@dataclass(frozen=True)
class ExperimentParams:
    """Raw SI inputs of the membrane + condensate setup."""

    omega_m: float
    mass: float
    mu_m: float
    temperature: float
    B0: float
    x0: float
    N_atoms: float = 1e5
    g_F: float = 2.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number, got {v!r}")
        for name in ("omega_m", "mass", "x0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.N_atoms < 1:
            raise ValueError("N_atoms must be at least 1")


PAPER_PARAMS = ExperimentParams(
    omega_m=2 * math.pi * 1e6,
    mass=5e-13,
    mu_m=2e-11,
    temperature=4.0,
    B0=1e-5,  # 0.1 G
    x0=5e-6,
    N_atoms=1e5,
    g_F=2.0,
)


@dataclass(frozen=True)
class DerivedParams:
    """Derived scalars (SI) plus the dimensionless numbers the engines use.

    ``eta`` is ``inf`` for a zero-temperature membrane; use :attr:`tanh_eta`
    and :attr:`coth_eta`, which are exactly 1 in that case.
    """

    A: float
    A_sa: float
    Omega_L0: float
    delta_Omega: float
    eta: float
    x_zp: float
    B_c: float
    B_vprime: float
    nbar: float
    omega_m: float
    mass: float
    hbar: float = field(default=_sc.hbar, repr=False)

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.eta)

    @property
    def tanh_eta(self) -> float:
        return 1.0 if self.zero_temperature else math.tanh(self.eta)

    @property
    def coth_eta(self) -> float:
        return 1.0 if self.zero_temperature else 1.0 / math.tanh(self.eta)

    @property
    def kappa(self) -> float:
        """Backaction parameter in units of the zero-point length."""
        return self.A / self.x_zp

    @property
    def larmor(self) -> float:
        """Larmor frequency in units of omega_m."""
        return self.Omega_L0 / self.omega_m

    @property
    def delta(self) -> float:
        """delta_Omega / omega_m, equal to kappa**2 / 4."""
        return self.delta_Omega / self.omega_m

    @property
    def p_zp(self) -> float:
        return self.mass * self.omega_m * self.x_zp

    def with_A(self, A: float) -> "DerivedParams":
        """Copy with a different backaction parameter (delta_Omega follows)."""
        dOm = self.mass * self.omega_m**2 * A**2 / (2 * self.hbar)
        scale = A / self.A if self.A else float("nan")
        return replace(self, A=A, A_sa=self.A_sa * scale if self.A else self.A_sa, delta_Omega=dOm)

    def with_kappa(self, kappa: float) -> "DerivedParams":
        return self.with_A(kappa * self.x_zp)

    def with_larmor(self, Omega_L0: float) -> "DerivedParams":
        return replace(self, Omega_L0=Omega_L0)

    def with_nbar(self, nbar: float) -> "DerivedParams":
        """Copy at the temperature giving mean occupation ``nbar`` (0 means T=0)."""
        if nbar < 0:
            raise ValueError("nbar must be non-negative")
        eta = math.inf if nbar == 0 else 0.5 * math.log1p(1.0 / nbar)
        return replace(self, eta=eta, nbar=nbar)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eta"] = None if self.zero_temperature else self.eta
        out["kappa"] = self.kappa
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DerivedParams":
        """Inverse of :meth:`to_dict` (extra computed keys are ignored)."""
        kw = {f.name: data[f.name] for f in fields(cls) if f.name in data}
        kw["eta"] = math.inf if kw.get("eta") is None else kw["eta"]
        return cls(**kw)


def derive_params(c: PhysicalConstants, e: ExperimentParams) -> DerivedParams:
    B_c, B_vp = linearized_field(c, e)
    k_omega2 = e.mass * e.omega_m**2
    A_sa = c.mu_B * e.g_F * B_vp / k_omega2
    A = e.N_atoms * A_sa
    x_zp = math.sqrt(c.hbar / (2 * e.mass * e.omega_m))
    if e.temperature == 0:
        eta = math.inf
        nbar = 0.0
    else:
        eta = c.hbar * e.omega_m / (2 * c.k_B * e.temperature)
        nbar = 1.0 / math.expm1(2 * eta)
    return DerivedParams(
        A=A,
        A_sa=A_sa,
        Omega_L0=c.mu_B * e.g_F * B_c / c.hbar,
        delta_Omega=k_omega2 * A**2 / (2 * c.hbar),
        eta=eta,
        x_zp=x_zp,
        B_c=B_c,
        B_vprime=B_vp,
        nbar=nbar,
        omega_m=e.omega_m,
        mass=e.mass,
        hbar=c.hbar,
    )


def dipole_field(c: PhysicalConstants, e: ExperimentParams, point) -> np.ndarray:
    """Exact field (T) of the point dipole ``mu_m z_hat`` at the origin."""
    x, y, z = (float(v) for v in point)
    r2 = x * x + y * y + z * z
    if r2 == 0:
        raise ValueError("dipole field is singular at the origin")
    r = math.sqrt(r2)
    pref = c.mu0_over_4pi * e.mu_m / r**3
    return np.array([pref * 3 * x * z / r2, pref * 3 * y * z / r2, pref * (3 * z * z / r2 - 1)])


def linearized_field(c: PhysicalConstants, e: ExperimentParams) -> tuple[float, float]:
    """(B_c, B_v') of the field linearised in the membrane displacement at z=y=0."""
    k = c.mu0_over_4pi * e.mu_m
    return e.B0 - k / e.x0**3, 3 * k / e.x0**4


def visibility_ratio(d: DerivedParams) -> float:
    """(A/x_zp)/sqrt(tanh eta); of order one or more means visible Wigner fringes."""
    return d.kappa / math.sqrt(d.tanh_eta)


def load_params(path) -> ExperimentParams:
    """Read ExperimentParams from a JSON document (SI units, exact field names)."""
    data = json.loads(Path(path).read_text())
    return params_from_dict(data)


def params_from_dict(data: dict) -> ExperimentParams:
    names = {f.name for f in fields(ExperimentParams)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown parameter fields: {sorted(unknown)}")
    required = {f.name for f in fields(ExperimentParams) if f.default is MISSING}
    missing = required - set(data)
    if missing:
        raise ValueError(f"missing parameter fields: {sorted(missing)}")
    return ExperimentParams(**{k: float(v) for k, v in data.items()})


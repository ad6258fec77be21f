"""Brute-force reference simulator in a truncated number-state basis.

Nothing here uses the closed-form engines: states are Fock-space arrays,
propagators are matrix exponentials, Kraus operators act on explicit joint
states, and Wigner functions come from direct quadrature of the defining
integral.  It is slow and only meant for validation at modest temperatures.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .grid import GridSpec, WignerGrid
from .params import DerivedParams
from .spin1 import SPIN_VALUES, as_kraus, initial_bec_density, prepare_pi_half


class TruncationError(RuntimeError):
    """Population leaked into the top Fock levels."""


@dataclass(frozen=True)
class FockConfig:
    n_max: int = 80
    pad: int = 60
    tail: float = 1e-12
    top_tol: float = 1e-10

    def __post_init__(self):
        if self.n_max < 10:
            raise ValueError("n_max must be at least 10")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass
class OracleOutcome:
    probability: float
    rho: np.ndarray  # normalised membrane density matrix, Fock basis
    psi: np.ndarray | None = None  # unnormalised joint state (3, N) for pure runs
    top_population: float = 0.0


@dataclass
class OracleRun:
    outcomes: dict = field(default_factory=dict)
    dim: int = 0

    @property
    def total_probability(self) -> float:
        return float(sum(o.probability for o in self.outcomes.values()))


@lru_cache(maxsize=8)
def _annihilation(n: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)
    a.flags.writeable = False
    return a


def displacement(z: complex, dim: int, pad: int = 60) -> np.ndarray:
    """D(z) = exp(z a^dag - z* a), computed in a padded space and cropped."""
    n = dim + pad
    a = _annihilation(n)
    return expm(z * a.T - np.conj(z) * a)[:dim, :dim]


def sector_hamiltonian(d: DerivedParams, alpha: int, dim: int) -> np.ndarray:
    """H_alpha / (hbar omega_m) for the membrane with the spin frozen at alpha."""
    a = _annihilation(dim)
    n = np.arange(dim)
    return np.diag(n + 0.5) + 0.5 * alpha * d.kappa * (a + a.T) + d.larmor * alpha * np.eye(dim)


def exact_sector_propagator(d: DerivedParams, alpha: int, t: float, cfg: FockConfig = FockConfig()) -> np.ndarray:
    """Membrane propagator in spin sector ``alpha`` over ``t`` seconds.

    Built as phase * D(-alpha kappa/2) exp(-i H_0 t) D(alpha kappa/2).
    """
    if alpha not in SPIN_VALUES:
        raise ValueError("alpha must be -1, 0 or +1")
    th = d.omega_m * t
    dim = cfg.dim
    free = np.exp(-1j * (np.arange(dim) + 0.5) * th)
    if alpha == 0:
        return np.diag(free)
    shift = 0.5 * alpha * d.kappa
    Dp = displacement(shift, dim + cfg.pad, cfg.pad)
    Dm = displacement(-shift, dim + cfg.pad, cfg.pad)
    n = dim + cfg.pad
    free_p = np.exp(-1j * (np.arange(n) + 0.5) * th)
    U = (Dm * free_p[None, :]) @ Dp
    phase = np.exp(-1j * (d.larmor * alpha - d.delta * alpha**2) * th)
    return phase * U[:dim, :dim]


def direct_sector_propagator(d: DerivedParams, alpha: int, t: float, cfg: FockConfig = FockConfig()) -> np.ndarray:
    """exp(-i H_alpha t / hbar) by eigendecomposition in the padded space."""
    n = cfg.dim + cfg.pad
    w, v = np.linalg.eigh(sector_hamiltonian(d, alpha, n))
    U = (v * np.exp(-1j * w * d.omega_m * t)[None, :]) @ v.T
    return U[: cfg.dim, : cfg.dim]


def thermal_fock(nbar: float, dim: int, tail: float = 1e-12) -> np.ndarray:
    """Boltzmann populations, cut once the cumulative weight passes 1 - tail."""
    if nbar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    r = nbar / (nbar + 1)
    n = np.arange(dim)
    p = (1 - r) * r**n
    cut = int(np.searchsorted(np.cumsum(p), 1 - tail)) + 1
    if cut >= dim:
        raise TruncationError(f"thermal state with nbar={nbar} needs more than {dim} levels")
    p[cut:] = 0.0
    return p / p.sum()


def required_dim(nbar: float, tail: float = 1e-12, margin: int = 60) -> int:
    """Fock dimension that holds the thermal tail plus room for displacements."""
    if nbar == 0:
        return margin
    r = nbar / (nbar + 1)
    cut = math.ceil(math.log(tail) / math.log(r))
    return cut + margin


def coherent_fock(u: complex, dim: int, pad: int = 60) -> np.ndarray:
    v = np.zeros(dim + pad, dtype=complex)
    v[0] = 1.0
    return (displacement(u, dim + pad, pad) @ v)[:dim]


def _top(rho_or_psi: np.ndarray, pure: bool) -> float:
    if pure:
        return float((np.abs(rho_or_psi[..., -3:]) ** 2).sum())
    return float(np.abs(np.einsum("aann->an", rho_or_psi)[:, -3:]).sum())


def run_schedule_oracle(
    d: DerivedParams,
    intervals,
    kraus=None,
    initial: str = "thermal",
    coherent=(0.0, 0.0),
    cfg: FockConfig | None = None,
    spin_state=None,
    check: bool = True,
) -> OracleRun:
    """Evolve, apply spin Kraus operators, repeat; exhaustive over F_y outcomes.

    ``kraus`` is a list of labels/matrices for one outcome sequence, or None
    for every F_y projector sequence.  ``initial`` is "thermal" (at d.nbar)
    or "coherent" with amplitude ``coherent = (a0, b0)``.
    """
    if cfg is None:
        dim = required_dim(d.nbar) if initial == "thermal" else 80
        cfg = FockConfig(n_max=max(dim, 80) - 1)
    dim = cfg.dim
    props = {}
    for t in set(intervals):
        props[t] = [exact_sector_propagator(d, s, t, cfg) for s in SPIN_VALUES]

    if initial == "thermal":
        c = None
        rho0 = initial_bec_density() if spin_state is None else np.asarray(spin_state, dtype=complex)
        pm = np.diag(thermal_fock(d.nbar, dim, cfg.tail)).astype(complex)
        state = rho0[:, :, None, None] * pm[None, None, :, :]
        pure = False
    elif initial == "coherent":
        c = prepare_pi_half() if spin_state is None else np.asarray(spin_state, dtype=complex)
        u0 = complex(coherent[0], coherent[1])
        state = c[:, None] * coherent_fock(u0, dim, cfg.pad)[None, :]
        pure = True
    else:
        raise ValueError("initial must be 'thermal' or 'coherent'")

    if kraus is None:
        sequences = list(itertools.product(SPIN_VALUES, repeat=len(intervals)))
    else:
        sequences = [tuple(kraus)]

    run = OracleRun(dim=dim)
    cache = {(): state}
    for seq in sequences:
        tokens = tuple(v if isinstance(v, (int, np.integer)) else ("M", i) for i, v in enumerate(seq))
        for m in range(1, len(seq) + 1):
            key = tokens[:m]
            if key in cache:
                continue
            prev = cache[tokens[: m - 1]]
            U = props[intervals[m - 1]]
            M = as_kraus(seq[m - 1])
            if pure:
                ev = np.stack([U[i] @ prev[i] for i in range(3)])
                new = np.einsum("ga,an->gn", M, ev)
            else:
                ev = np.empty_like(prev)
                for i in range(3):
                    for j in range(3):
                        ev[i, j] = U[i] @ prev[i, j] @ U[j].conj().T
                new = np.einsum("ga,abmn,hb->ghmn", M, ev, M.conj())
            cache[key] = new
        final = cache[tokens]
        top = _top(final, pure)
        if pure:
            rho = np.einsum("gm,gn->mn", final, final.conj())
        else:
            rho = np.einsum("ggmn->mn", final)
        prob = float(np.trace(rho).real)
        if check and top > cfg.top_tol * max(prob, 1e-300) and top > cfg.top_tol**2:
            raise TruncationError(f"top-level population {top:.2e} for outcome {seq}")
        key = tokens if all(isinstance(v, (int, np.integer)) for v in tokens) else "custom"
        run.outcomes[key] = OracleOutcome(prob, rho / prob if prob > 0 else rho, final if pure else None, top)
    return run


def sector_energy(d: DerivedParams, alpha: int, psi: np.ndarray) -> float:
    H = sector_hamiltonian(d, alpha, len(psi))
    return float(np.vdot(psi, H @ psi).real / np.vdot(psi, psi).real)


# -- position representation and Wigner quadrature ---------------------------


def hermite_functions(q: np.ndarray, dim: int) -> np.ndarray:
    """Oscillator eigenfunctions psi_n(q) for q in units of x_zp, shape (len(q), dim)."""
    xi = np.asarray(q, dtype=float) / math.sqrt(2.0)
    out = np.zeros((xi.size, dim))
    out[:, 0] = math.pi**-0.25 * np.exp(-0.5 * xi**2)
    if dim > 1:
        out[:, 1] = math.sqrt(2.0) * xi * out[:, 0]
    for n in range(1, dim - 1):
        out[:, n + 1] = math.sqrt(2.0 / (n + 1)) * xi * out[:, n] - math.sqrt(n / (n + 1)) * out[:, n - 1]
    return out * 2**-0.25


def fock_to_position(rho: np.ndarray, q_f, q_i=None) -> np.ndarray:
    """<q_f| rho |q_i> on the given points (density per unit q)."""
    q_i = q_f if q_i is None else q_i
    dim = rho.shape[0]
    return hermite_functions(q_f, dim) @ rho @ hermite_functions(q_i, dim).T


def _support_radius(rho: np.ndarray) -> float:
    dim = rho.shape[0]
    q = np.linspace(-4 * math.sqrt(2 * dim + 1) - 10, 4 * math.sqrt(2 * dim + 1) + 10, 4001)
    H = hermite_functions(q, dim)
    dens = np.einsum("im,mn,in->i", H, rho, H).real
    big = np.flatnonzero(np.abs(dens) > 1e-22 * np.abs(dens).max())
    return float(max(abs(q[big[0]]), abs(q[big[-1]]))) + 1.0


def wigner_numeric(state: np.ndarray, grid: GridSpec, step: float = 0.04, x_zp: float = 1.0, p_zp: float = 1.0) -> WignerGrid:
    """W(q, k) = (1/4pi) int dxi exp(-i k xi / 2) <q + xi/2| rho |q - xi/2>.

    ``state`` is a Fock-basis density matrix or state vector.  The integral
    is a trapezoid sum on a lattice aligned with the grid's q points.
    """
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    q, k = grid.q, grid.k
    hq = q[1] - q[0]
    r = max(1, math.ceil(hq / step))
    delta = hq / r
    R = _support_radius(rho)
    lo = min(q[0], -R)
    hi = max(q[-1], R)
    n_lo = math.ceil((q[0] - lo) / delta)
    n_hi = math.ceil((hi - q[-1]) / delta)
    lattice = q[0] + delta * np.arange(-n_lo, (len(q) - 1) * r + n_hi + 1)
    H = hermite_functions(lattice, rho.shape[0])
    rl = H @ rho @ H.T
    L = len(lattice)
    W = np.zeros((len(q), len(k)), dtype=complex)
    for j in range(len(q)):
        c = n_lo + j * r
        m_max = min(c, L - 1 - c)
        m = np.arange(-m_max, m_max + 1)
        f = rl[c + m, c - m]
        E = np.exp(-1j * np.outer(k, m) * delta)
        W[j] = E @ f
    W *= delta / (2 * math.pi)
    peak = np.abs(W.real).max()
    resid = float(np.abs(W.imag).max() / peak) if peak else 0.0
    return WignerGrid(q, k, W.real, x_zp, p_zp, resid, {"kind": "oracle"})


def fock_wigner_laguerre(n: int, q: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Closed-form Wigner function of |n> in oscillator units (for cross-checks)."""
    from scipy.special import eval_laguerre

    r2 = q[:, None] ** 2 + k[None, :] ** 2
    return (-1) ** n / (2 * math.pi) * np.exp(-r2 / 2) * eval_laguerre(n, r2)

"""Pure-state branch evolution for a membrane that starts in a coherent state.

Each measurement splits every branch into up to three displaced coherent
states; after n measurements the membrane is a superposition of at most 3**n
of them, one per spin path.  Amplitudes are kept unnormalised so that the
squared norm is the probability of the outcome sequence.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .functionals import MeasurementSchedule, build_path_table, tail_phases
from .grid import GridSpec, WignerGrid
from .params import DerivedParams
from .spin1 import SPIN_VALUES, prepare_pi_half, spin_index
from .thermal import IMAG_TOL, CapExceeded, ImaginaryResidue

MAX_MEASUREMENTS = 8
NEGATIVITY_THRESHOLD = -1e-4 / (2 * math.pi)


@dataclass(frozen=True)
class CoherentInit:
    a0: float
    b0: float

    def __post_init__(self):
        if not (math.isfinite(self.a0) and math.isfinite(self.b0)):
            raise ValueError("coherent amplitude must be finite")

    @property
    def u(self) -> complex:
        return complex(self.a0, self.b0)


@dataclass(frozen=True)
class CoherentBranch:
    path: tuple
    final_spin: int
    amplitude: complex
    a: float
    b: float
    Theta: float


@dataclass
class CoherentState:
    """Unnormalised joint state sum_g |g> (x) sum_p amp[g, p] D(u_p)|0>."""

    paths: np.ndarray
    amp: np.ndarray  # (3, n_paths)
    a: np.ndarray
    b: np.ndarray
    Theta: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.a + 1j * self.b

    def branches(self, tol: float = 0.0) -> list[CoherentBranch]:
        out = []
        for g in SPIN_VALUES:
            row = self.amp[spin_index(g)]
            for p in np.flatnonzero(np.abs(row) > tol):
                out.append(CoherentBranch(tuple(int(v) for v in self.paths[p]), g, complex(row[p]),
                                          float(self.a[p]), float(self.b[p]), float(self.Theta[p])))
        return out

    def overlaps(self) -> np.ndarray:
        """<u_p'|u_p> for all path pairs (rows p', columns p)."""
        u = self.u
        return np.exp(-0.5 * np.abs(u)[:, None] ** 2 - 0.5 * np.abs(u)[None, :] ** 2 + np.conj(u)[:, None] * u[None, :])

    @property
    def probability(self) -> float:
        S = self.overlaps()
        return float(np.einsum("gq,qp,gp->", self.amp.conj(), S, self.amp).real)

    def fock_amplitudes(self, dim: int) -> np.ndarray:
        """Joint state in the (spin, Fock) basis, shape (3, dim)."""
        n = np.arange(dim)
        logfact = np.array([0.0] + list(np.cumsum(np.log(np.arange(1, dim)))))
        u = self.u
        coef = np.exp(-0.5 * np.abs(u)[:, None] ** 2 - 0.5 * logfact[None, :]) * u[:, None] ** n[None, :]
        return self.amp @ coef

    def wavefunctions(self, q) -> np.ndarray:
        """Membrane wavefunction per final spin value, shape (3, len(q)); q in x_zp units."""
        q = np.asarray(q, dtype=float)
        u = self.u
        psi = (2 * math.pi) ** -0.25 * np.exp(
            -((q[None, :] - 2 * u.real[:, None]) ** 2) / 4 + 1j * (u.imag[:, None] * q[None, :] - (u.real * u.imag)[:, None])
        )
        return self.amp @ psi

    def reduced_density_matrix(self, q, normalize: bool = True) -> np.ndarray:
        """<q|rho_membrane|q'> with the spin traced out."""
        psi = self.wavefunctions(q)
        rho = psi.T @ psi.conj()
        return rho / self.probability if normalize else rho

    def membrane_spread(self) -> float:
        return float(np.abs(self.u - self.u.mean()).max()) if len(self.u) else 0.0


def coherent_functionals_array(angles, paths, init: CoherentInit, kappa: float):
    """Closed-form a, b, Theta for every row of ``paths``."""
    th = np.asarray(angles, dtype=float)
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    n = len(th)
    h = 0.5 * kappa
    T = tail_phases(th)
    c, s = np.cos(T), np.sin(T)
    prev = np.concatenate([np.zeros((paths.shape[0], 1)), paths[:, :-1]], axis=1)
    d = paths - prev
    X = paths[:, -1] - (d * c).sum(axis=1)
    P = (d * s).sum(axis=1)
    T1n = T[0]
    a = init.a0 * math.cos(T1n) + init.b0 * math.sin(T1n) - h * X
    b = init.b0 * math.cos(T1n) - init.a0 * math.sin(T1n) - h * P
    # T_{1,i} with T_{1,0} = 0
    T1 = np.concatenate([[0.0], np.cumsum(th)])
    Theta = np.zeros(paths.shape[0])
    for i in range(1, n + 1):
        drift = init.a0 * (math.sin(T1[i]) - math.sin(T1[i - 1])) - init.b0 * (math.cos(T1[i]) - math.cos(T1[i - 1]))
        kick = np.zeros(paths.shape[0])
        for j in range(1, i + 1):
            Tji = T1[i] - T1[j - 1]
            Tji1 = T1[i - 1] - T1[j - 1] if j <= i - 1 else 0.0
            kick += d[:, j - 1] * (math.sin(Tji) - math.sin(Tji1))
        Theta += paths[:, i - 1] * (drift + h * kick)
    return a, b, Theta


def coherent_functionals(schedule, path, init: CoherentInit, kappa: float) -> tuple[float, float, float]:
    angles = schedule.angles if isinstance(schedule, MeasurementSchedule) else schedule
    if len(path) != len(angles):
        raise ValueError("path length must equal the number of intervals")
    a, b, Th = coherent_functionals_array(angles, [path], init, kappa)
    return float(a[0]), float(b[0]), float(Th[0])


def coherent_recurrence(angles, path, init: CoherentInit, kappa: float) -> tuple[float, float, float]:
    """Step-by-step update of (a, b, Theta); independent check of the closed forms."""
    h = 0.5 * kappa
    a, b, Th = init.a0, init.b0, 0.0
    for t, s in zip(angles, path):
        c, sn = math.cos(t), math.sin(t)
        a2 = a * c + b * sn - s * h * (1 - c)
        b2 = b * c - a * sn - s * h * sn
        Th += s * (b - b2)
        a, b = a2, b2
    return a, b, Th


def evolve_coherent(d: DerivedParams, schedule: MeasurementSchedule, init: CoherentInit, spin_state=None,
                    max_measurements: int = MAX_MEASUREMENTS) -> CoherentState:
    if schedule.n > max_measurements:
        raise CapExceeded(f"{schedule.n} measurements exceed the branch cap of {max_measurements}")
    c = prepare_pi_half() if spin_state is None else np.asarray(spin_state, dtype=complex)
    tab = build_path_table(schedule.angles, schedule.kraus_matrices(), d.larmor, d.delta)
    a, b, Theta = coherent_functionals_array(tab.angles, tab.paths, init, d.kappa)
    zero_point = 0.5 * tab.angles.sum()
    phase = np.exp(-1j * (tab.dyn_phase + zero_point) - 0.5j * d.kappa * Theta)
    amp = tab.chain * (c[tab.first_index] * phase)[None, :]
    return CoherentState(tab.paths, amp, a, b, Theta)


def outcome_table(d: DerivedParams, intervals, init: CoherentInit, spin_state=None) -> dict[tuple, float]:
    out = {}
    for seq in itertools.product(SPIN_VALUES, repeat=len(intervals)):
        sch = MeasurementSchedule(tuple(intervals), seq, d.omega_m)
        out[seq] = evolve_coherent(d, sch, init, spin_state).probability
    return out


def default_grid(state: CoherentState | None, init: CoherentInit, nq: int = 201, nk: int = 201, widths: float = 6.0) -> GridSpec:
    if state is None:
        centers = np.array([init.u])
    else:
        keep = np.abs(state.amp).max(axis=0) > 0
        centers = state.u[keep] if keep.any() else state.u
    qc, kc = 2 * centers.real, 2 * centers.imag
    half_q = widths + 0.5 * (qc.max() - qc.min())
    half_k = widths + 0.5 * (kc.max() - kc.min())
    return GridSpec.centered(0.5 * (qc.max() + qc.min()), 0.5 * (kc.max() + kc.min()), half_q, half_k, nq, nk)


def _cross_wigner(ua, ub, q, k):
    """q and k factors of the Wigner function of |u_a><u_b| (oscillator units)."""
    sa, sb = ua.real + ub.real, ua.imag + ub.imag
    da, db = ua.real - ub.real, ua.imag - ub.imag
    F = np.exp(-0.5 * (q[:, None] - sa[None, :] - 1j * db[None, :]) ** 2)
    G = np.exp(-0.5 * (k[:, None] - sb[None, :] + 1j * da[None, :]) ** 2)
    const = np.exp(1j * (ub.real * ua.imag - ua.real * ub.imag) - 0.5 * da**2 - 0.5 * db**2)
    return F, G, const


def wigner_coherent(d: DerivedParams, schedule: MeasurementSchedule | None, init: CoherentInit,
                    grid: GridSpec | None = None, spin_state=None, deterministic: bool = False) -> WignerGrid:
    """Normalised Wigner function after the schedule (``None`` means no measurement)."""
    if schedule is None:
        grid = default_grid(None, init) if grid is None else grid
        q, k = grid.q, grid.k
        vals = np.exp(-0.5 * ((q[:, None] - 2 * init.a0) ** 2 + (k[None, :] - 2 * init.b0) ** 2)) / (2 * math.pi)
        return WignerGrid(q, k, vals, d.x_zp, d.p_zp, meta={"kind": "coherent", "probability": 1.0})
    state = evolve_coherent(d, schedule, init, spin_state)
    grid = default_grid(state, init) if grid is None else grid
    return _state_wigner(d, state, grid, deterministic)


def _state_wigner(d: DerivedParams, state: CoherentState, grid: GridSpec, deterministic: bool = False) -> WignerGrid:
    C = state.amp.T @ state.amp.conj()
    ia, ib = np.nonzero(C)
    w = C[ia, ib]
    u = state.u
    q, k = grid.q, grid.k
    W = np.zeros((len(q), len(k)), dtype=complex)
    for lo in range(0, len(ia), 4096):
        sl = slice(lo, lo + 4096)
        F, G, const = _cross_wigner(u[ia[sl]], u[ib[sl]], q, k)
        F = F * (w[sl] * const)[None, :]
        W += np.einsum("ip,jp->ij", F, G, optimize=False) if deterministic else F @ G.T
    W /= 2 * math.pi
    prob = state.probability
    peak = np.abs(W.real).max()
    resid = float(np.abs(W.imag).max() / peak) if peak else 0.0
    if resid > IMAG_TOL:
        raise ImaginaryResidue(f"imaginary residue {resid:.3e} exceeds {IMAG_TOL:g}")
    return WignerGrid(q, k, W.real / prob, d.x_zp, d.p_zp, resid, {"kind": "coherent-post", "probability": prob})


def negativity_scan(d: DerivedParams, init: CoherentInit, outcome: int, t_values, grid_points: int = 121,
                    widths: float = 6.0) -> list[tuple[float, float]]:
    """Minimum of the post-measurement Wigner function versus the first interval.

    ``t_values`` are interval lengths in seconds.  Each grid is centred on the
    branch cloud and spans ``widths`` vacuum widths beyond it.
    """
    out = []
    for t in t_values:
        if not t > 0:
            raise ValueError("measurement intervals must be positive")
        sch = MeasurementSchedule((float(t),), (outcome,), d.omega_m)
        state = evolve_coherent(d, sch, init)
        if state.probability <= 0:
            out.append((float(t), float("nan")))
            continue
        grid = default_grid(state, init, grid_points, grid_points, widths)
        W = _state_wigner(d, state, grid)
        out.append((float(t), W.min()))
    return out


def negative_windows(scan, threshold: float = NEGATIVITY_THRESHOLD) -> list[tuple[float, float]]:
    """Contiguous t ranges where min W falls below ``threshold``."""
    wins, start, last = [], None, None
    for t, m in scan:
        if m < threshold:
            start = t if start is None else start
            last = t
        elif start is not None:
            wins.append((start, last))
            start = None
    if start is not None:
        wins.append((start, last))
    return wins


def write_branch_table(state: CoherentState, path, tol: float = 0.0) -> Path:
    """CSV of (path, final spin, Re/Im amplitude, a, b, Theta), one row per nonzero branch."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "final_spin", "amp_re", "amp_im", "a", "b", "Theta"])
        for br in state.branches(tol):
            w.writerow([" ".join(f"{v:+d}" for v in br.path), br.final_spin, repr(br.amplitude.real),
                        repr(br.amplitude.imag), repr(br.a), repr(br.b), repr(br.Theta)])
    return path

"""Time evolution: exact unitary stepping, adiabatic frames, Floquet states.

The integrator advances U(t) by midpoint-exponential steps
U <- exp(-i H(t + dt/2) dt) U, each step exactly unitary because the
exponential goes through the eigendecomposition.  Step size adapts so the
local error, estimated by comparing one full step against two half steps,
stays below ``step_tol``; the accepted result is the two-half-step
composition.  Step boundaries align with the protocol's breakpoints so
kinks in the driving never sit inside a step.

The adiabatic frame tracks instantaneous eigenpairs along a time grid,
ordering branches by continuity (maximal successive overlap) rather than by
value, and fixing eigenvector phases by projection on the previous point.
Crossing times are the local minima of the relevant branch gap.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from . import _kernels as K
from .errors import BranchAmbiguity, NumericalFailure, StepUnderflow
from .linalg import EigenSystem, _fix_phases, eig_hermitian, unitarity_defect
from .model import DrivingProtocol, SystemSpec, hamiltonian

DT_FLOOR = 1e-12
UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class UnitaryRecord:
    """Accumulated propagator U(t0 -> t1) with step-count and defect diagnostics."""

    U: np.ndarray
    t0: float
    t1: float
    steps: int
    unitarity_defect: float


# ---------------------------------------------------------------------------
# Stepping engine (flat kernels)
# ---------------------------------------------------------------------------


def _h_flat_fn(spec: SystemSpec, proto: DrivingProtocol):
    """Closure evaluating the Hamiltonian in flat Hermitian form."""
    u, c1, c2 = proto.u, proto.c1, proto.c2
    if spec.sites == 2:
        def h(t):
            return (u(t), 1.0, complex(c1(t)))
        return h, 2

    def h(t):
        return (u(t), 0.0, 0.0, complex(c1(t)), complex(c2(t)), 1.0 + 0j)
    return h, 3


def _current_flat_fn(spec: SystemSpec, proto: DrivingProtocol, bond: int):
    """Closure evaluating the bond-current operator as a flat full matrix."""
    if spec.sites == 2:
        c1 = proto.c1

        def cur(t):
            x = 1j * c1(t)
            return (0j, x, -x, 0j)
        return cur
    track = proto.c1 if bond == 1 else proto.c2
    if bond == 1:
        def cur(t):
            x = 1j * track(t)
            return (0j, x, 0j, -x, 0j, 0j, 0j, 0j, 0j)
    else:
        def cur(t):
            x = 1j * track(t)
            return (0j, 0j, x, 0j, 0j, 0j, -x, 0j, 0j)
    return cur


def _segments(t0: float, t1: float, breakpoints) -> list:
    cuts = sorted(b for b in breakpoints if t0 < b < t1)
    edges = [t0] + cuts + [t1]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _eig_hflat(h, dim):
    return K.eig2(*h) if dim == 2 else K.eig3(*h)


def _expm(lams, v, dt, dim):
    return K.expm2(lams, v, dt) if dim == 2 else K.expm3(lams, v, dt)


def adaptive_steps(h_fn, dim, t0, t1, dt_max, step_tol, breakpoints=()):
    """Yield primitive steps (t_mid, dt, lams, V, U_step) covering [t0, t1].

    With ``step_tol`` set, each trial step is accepted when the Frobenius
    distance between the one-step and two-half-step propagators is below the
    tolerance, and the two half steps are emitted.  ``step_tol=None`` runs
    fixed steps of at most ``dt_max`` (for convergence studies).
    """
    tiny = 1e-12 * max(1.0, abs(t1 - t0))
    for (a, b) in _segments(t0, t1, breakpoints):
        if step_tol is None:
            n = max(1, math.ceil((b - a) / dt_max - 1e-12))
            dt = (b - a) / n
            for k in range(n):
                tm = a + (k + 0.5) * dt
                lams, v = _eig_hflat(h_fn(tm), dim)
                yield tm, dt, lams, v, _expm(lams, v, dt, dim)
            continue
        t = a
        dt = min(dt_max, b - a)
        while t < b - tiny:
            dt = min(dt, b - t)
            while True:
                lams_f, v_f = _eig_hflat(h_fn(t + 0.5 * dt), dim)
                u_full = _expm(lams_f, v_f, dt, dim)
                lams_1, v_1 = _eig_hflat(h_fn(t + 0.25 * dt), dim)
                u_1 = _expm(lams_1, v_1, 0.5 * dt, dim)
                lams_2, v_2 = _eig_hflat(h_fn(t + 0.75 * dt), dim)
                u_2 = _expm(lams_2, v_2, 0.5 * dt, dim)
                err = K.fro_diff(u_full, K.mul2(u_2, u_1) if dim == 2 else K.mul3(u_2, u_1))
                if err <= step_tol:
                    break
                dt *= 0.5
                if dt < DT_FLOOR:
                    raise StepUnderflow(
                        f"step size underflow at t={t:.6g} (local error {err:.3e})"
                    )
            yield t + 0.25 * dt, 0.5 * dt, lams_1, v_1, u_1
            yield t + 0.75 * dt, 0.5 * dt, lams_2, v_2, u_2
            t += dt
            # third-order local error model: err ~ C dt^3
            if err > 0.0:
                grow = 0.9 * (step_tol / err) ** (1.0 / 3.0)
                dt *= min(2.5, max(0.5, grow))
            else:
                dt *= 2.5
            dt = min(dt, dt_max)


def propagate(
    spec: SystemSpec,
    proto: DrivingProtocol,
    t0: float | None = None,
    t1: float | None = None,
    *,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
) -> UnitaryRecord:
    """Accumulate U(t0 -> t1) by adaptive midpoint-exponential stepping."""
    t0 = proto.t_start if t0 is None else t0
    t1 = proto.t_end if t1 is None else t1
    proto._check_time(t0)
    proto._check_time(t1)
    if dt_max <= 0.0:
        raise ValueError("dt_max must be positive")
    h_fn, dim = _h_flat_fn(spec, proto)
    u_tot = K.IDENT2 if dim == 2 else K.IDENT3
    mul = K.mul2 if dim == 2 else K.mul3
    steps = 0
    for _, _, _, _, u_step in adaptive_steps(
        h_fn, dim, t0, t1, dt_max, step_tol, proto.breakpoints
    ):
        u_tot = mul(u_step, u_tot)
        steps += 1
    u = np.array(u_tot, dtype=complex).reshape(dim, dim)
    defect = unitarity_defect(u)
    if defect > UNITARITY_TOL:
        raise NumericalFailure(
            f"propagator unitarity defect {defect:.3e} exceeds {UNITARITY_TOL}"
        )
    return UnitaryRecord(U=u, t0=t0, t1=t1, steps=steps, unitarity_defect=defect)


# ---------------------------------------------------------------------------
# Adiabatic frame
# ---------------------------------------------------------------------------

OVERLAP_FLOOR = 0.999


@dataclass(frozen=True)
class AdiabaticFrame:
    """Instantaneous eigensystem along a grid, branch-ordered by continuity.

    ``levels[k, b]`` is branch b's eigenvalue at ``times[k]``; branches keep
    their identity through avoided crossings (ordering by continuation, not
    by value).  ``states[k][:, b]`` is the phase-continuous eigenvector.
    """

    times: np.ndarray
    levels: np.ndarray
    states: np.ndarray
    crossing_pair: tuple
    crossing_times: tuple
    min_overlap: float

    @property
    def dim(self) -> int:
        return self.levels.shape[1]

    def gap(self, pair: tuple | None = None) -> np.ndarray:
        i, j = self.crossing_pair if pair is None else pair
        return np.abs(self.levels[:, j] - self.levels[:, i])

    def initial_basis(self) -> np.ndarray:
        return self.states[0]


def _refine_minimum(ts, gs, k):
    """Parabolic refinement of a local minimum at index k."""
    if k == 0 or k == len(ts) - 1:
        return float(ts[k])
    denom = gs[k + 1] - 2.0 * gs[k] + gs[k - 1]
    if denom <= 0.0:
        return float(ts[k])
    shift = 0.5 * (gs[k - 1] - gs[k + 1]) / denom
    h = ts[k + 1] - ts[k]
    return float(ts[k] + shift * h)


def adiabatic_frame(
    spec: SystemSpec, proto: DrivingProtocol, grid: int | np.ndarray = 2001
) -> AdiabaticFrame:
    """Track instantaneous eigenpairs over a time grid.

    Raises :class:`BranchAmbiguity` when consecutive eigenvector overlaps
    drop below 0.999 (grid too coarse to continue branches safely).
    """
    if isinstance(grid, (int, np.integer)):
        times = np.linspace(proto.t_start, proto.t_end, int(grid))
    else:
        times = np.asarray(grid, dtype=float)
    n = len(times)
    dim = spec.sites
    levels = np.empty((n, dim))
    states = np.empty((n, dim, dim), dtype=complex)
    es = eig_hermitian(hamiltonian(spec, proto, float(times[0])))
    levels[0] = es.eigenvalues
    states[0] = es.eigenvectors
    min_overlap = 1.0
    for k in range(1, n):
        es = eig_hermitian(hamiltonian(spec, proto, float(times[k])))
        m = states[k - 1].conj().T @ es.eigenvectors
        absm = np.abs(m)
        assign = {}
        used_cols = set()
        for _ in range(dim):
            idx = np.unravel_index(np.argmax(absm), absm.shape)
            b, c = int(idx[0]), int(idx[1])
            overlap = absm[b, c]
            if overlap < OVERLAP_FLOOR:
                raise BranchAmbiguity(
                    f"overlap {overlap:.6f} < {OVERLAP_FLOOR} at t={times[k]:.6g}; "
                    "refine the frame grid"
                )
            assign[b] = c
            used_cols.add(c)
            absm[b, :] = -1.0
            absm[:, c] = -1.0
            min_overlap = min(min_overlap, float(overlap))
        for b, c in assign.items():
            s = m[b, c]
            states[k][:, b] = es.eigenvectors[:, c] * (s.conjugate() / abs(s))
            levels[k, b] = es.eigenvalues[c]
    # Relevant pair: the branch pair with the smallest gap anywhere.
    best_pair, best_min = (0, 1), math.inf
    for i in range(dim):
        for j in range(i + 1, dim):
            g = float(np.min(np.abs(levels[:, j] - levels[:, i])))
            if g < best_min:
                best_min, best_pair = g, (i, j)
    gs = np.abs(levels[:, best_pair[1]] - levels[:, best_pair[0]])
    gmax = float(np.max(gs))
    # Crossing minima must dip well below the ridge between them.
    thresh = math.sqrt(max(best_min, 1e-300) * max(gmax, 1e-300))
    crossing_times = []
    for k in range(1, n - 1):
        if gs[k] <= gs[k - 1] and gs[k] < gs[k + 1] and gs[k] < thresh:
            crossing_times.append(_refine_minimum(times, gs, k))
    return AdiabaticFrame(
        times=times,
        levels=levels,
        states=states,
        crossing_pair=best_pair,
        crossing_times=tuple(crossing_times),
        min_overlap=min_overlap,
    )


def adiabatic_propagator(frame: AdiabaticFrame) -> UnitaryRecord:
    """Zero-order adiabatic propagator: branches keep their identity and
    accumulate the integral of their own level as a phase."""
    thetas = np.array(
        [simpson(frame.levels[:, b], x=frame.times) for b in range(frame.dim)]
    )
    u = (frame.states[-1] * np.exp(-1j * thetas)) @ frame.states[0].conj().T
    return UnitaryRecord(
        U=u,
        t0=float(frame.times[0]),
        t1=float(frame.times[-1]),
        steps=len(frame.times) - 1,
        unitarity_defect=unitarity_defect(u),
    )


@dataclass(frozen=True)
class PhaseRecord:
    """Dynamical phase: cumulative integral of the relevant branch gap."""

    times: np.ndarray
    phi: np.ndarray
    pair: tuple
    crossing_times: tuple
    phi1: float | None
    phi2: float | None

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.phi))


def dynamical_phase(frame: AdiabaticFrame, pair: tuple | None = None) -> PhaseRecord:
    """Integrate the gap between the two relevant adiabatic branches.

    The phase at the two crossing times (when present) controls the
    interference of consecutive crossings.
    """
    gs = frame.gap(pair)
    phi = cumulative_simpson(gs, x=frame.times, initial=0.0)
    tc = frame.crossing_times
    phi1 = float(np.interp(tc[0], frame.times, phi)) if len(tc) >= 1 else None
    phi2 = float(np.interp(tc[1], frame.times, phi)) if len(tc) >= 2 else None
    return PhaseRecord(
        times=frame.times,
        phi=phi,
        pair=frame.crossing_pair if pair is None else pair,
        crossing_times=tc,
        phi1=phi1,
        phi2=phi2,
    )


# ---------------------------------------------------------------------------
# Floquet analysis
# ---------------------------------------------------------------------------


def eig_unitary(u: np.ndarray) -> EigenSystem:
    """Eigenphases and orthonormal eigenvectors of a 2x2/3x3 unitary matrix.

    A unitary is normal, so its Hermitian and anti-Hermitian parts commute
    and can be diagonalized simultaneously; degenerate subspaces of the real
    part are split by the imaginary part.  Eigenvalues are returned as
    phases in (-pi, pi], ascending.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    defect = unitarity_defect(u)
    if defect > 1e-9:
        raise NumericalFailure(f"matrix is not unitary (defect {defect:.3e})")
    a = 0.5 * (u + u.conj().T)
    b = (u - u.conj().T) / 2j
    es = eig_hermitian(a)
    vecs = es.eigenvectors.copy()
    vals = es.eigenvalues
    # split clusters of the real part with the imaginary part
    k = 0
    while k < d:
        j = k + 1
        while j < d and vals[j] - vals[j - 1] <= 1e-8:
            j += 1
        if j - k > 1:
            w = vecs[:, k:j]
            sub = eig_hermitian(w.conj().T @ b @ w)
            vecs[:, k:j] = w @ sub.eigenvectors
        k = j
    phases = np.array(
        [cmath.phase(vecs[:, i].conj() @ u @ vecs[:, i]) for i in range(d)]
    )
    for i in range(d):
        res = np.linalg.norm(u @ vecs[:, i] - cmath.exp(1j * phases[i]) * vecs[:, i])
        if res > 1e-9:
            raise NumericalFailure(f"unitary eigenpair residual {res:.3e}")
    order = np.argsort(phases, kind="stable")
    return EigenSystem(phases[order], _fix_phases(vecs[:, order]))


def floquet_states(
    spec: SystemSpec,
    proto: DrivingProtocol,
    *,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
) -> EigenSystem:
    """Eigenstates of the one-period propagator, with quasi-energy phases.

    The protocol window is taken as one period; eigenvalues of the returned
    system are the propagator eigenphases in (-pi, pi].
    """
    rec = propagate(spec, proto, dt_max=dt_max, step_tol=step_tol)
    return eig_unitary(rec.U)

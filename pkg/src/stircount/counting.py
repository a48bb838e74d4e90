"""Transported-charge operator, counting distributions, and diagnostics.

The charge operator is the time integral of the Heisenberg-picture bond
current, Q = int U(t)^dag I(t) U(t) dt.  It is accumulated on the same
adaptive steps as the propagator, with the current frozen at each step
midpoint and the within-step integral done in closed form in the step's
eigenbasis.  Freezing H and I at the same midpoint makes the discrete
charge operator exactly consistent with the discrete propagator: the
two-bond continuity identity and the charge/occupation telescoping hold to
roundoff, independent of step size (step size only controls the distance
to the continuum limit).

Two counting distributions are produced:

* the spectral distribution P(Q): diagonalize Q, weights |<Q|psi0>|^2;
* the measured quasi-distribution P0(Q): Fourier transform of the
  counting-field kernel chi(r) = <psi-| psi+>, where psi+- evolve under
  H -+ (r/2) I.  chi inherits the reference run's step sequence so its
  r-derivatives at 0 reproduce the spectral mean and variance identically.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import (
    GridTooCoarse,
    NumericalFailure,
    ReductionInvalid,
    UnnormalizedState,
)
from .linalg import eig_hermitian, hermiticity_defect
from .model import DrivingProtocol, SystemSpec
from .propagation import (
    AdiabaticFrame,
    UnitaryRecord,
    _current_flat_fn,
    _h_flat_fn,
    adaptive_steps,
)

log = logging.getLogger(__name__)

HERMITICITY_GUARD = 1e-10
VARIANCE_CLIP = -1e-10


@dataclass(frozen=True)
class ChargeMatrix:
    """Hermitian transported-charge operator Q over [t0, t1] for one bond."""

    Q: np.ndarray
    basis_label: str
    t0: float
    t1: float
    bond: int
    steps: int
    hermiticity_defect: float

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def to_adiabatic(self, frame: AdiabaticFrame) -> "ChargeMatrix":
        """Express Q in the adiabatic basis at the initial time."""
        w = frame.initial_basis()
        return ChargeMatrix(
            Q=w.conj().T @ self.Q @ w,
            basis_label="adiabatic_initial",
            t0=self.t0,
            t1=self.t1,
            bond=self.bond,
            steps=self.steps,
            hermiticity_defect=self.hermiticity_defect,
        )


def _check_state(psi0: np.ndarray, dim: int) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi0.shape[0] != dim:
        raise ValueError(f"state has dimension {psi0.shape[0]}, expected {dim}")
    nrm = np.linalg.norm(psi0)
    if abs(nrm - 1.0) > 1e-9:
        raise UnnormalizedState(f"||psi0|| = {nrm:.12f}")
    return psi0


def _flat_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _charge_and_propagator(
    spec: SystemSpec,
    proto: DrivingProtocol,
    bond: int,
    t0: float | None,
    t1: float | None,
    dt_max: float,
    step_tol: float | None,
    record: list | None = None,
):
    """One pass: accumulate U(t0->t1) and the lifted charge operator.

    When ``record`` is a list, the primitive step sequence (t_mid, dt) is
    appended to it for later replay with dressed Hamiltonians.
    """
    t0 = proto.t_start if t0 is None else t0
    t1 = proto.t_end if t1 is None else t1
    h_fn, dim = _h_flat_fn(spec, proto)
    i_fn = _current_flat_fn(spec, proto, bond)
    if dim == 2:
        mul, dag, qstep = K.mul2, K.dag2, K.charge_step2
        u_tot = K.IDENT2
        q = (0j,) * 4
    else:
        mul, dag, qstep = K.mul3, K.dag3, K.charge_step3
        u_tot = K.IDENT3
        q = (0j,) * 9
    steps = 0
    for tm, dt, lams, v, u_step in adaptive_steps(
        h_fn, dim, t0, t1, dt_max, step_tol, proto.breakpoints
    ):
        t_in = qstep(lams, v, i_fn(tm), dt)
        ud = dag(u_tot)
        q = _flat_add(q, mul(mul(ud, t_in), u_tot))
        u_tot = mul(u_step, u_tot)
        steps += 1
        if record is not None:
            record.append((tm, dt))
    qm = np.array(q, dtype=complex).reshape(dim, dim)
    defect = float(np.linalg.norm(qm - qm.conj().T))
    if defect > HERMITICITY_GUARD:
        raise NumericalFailure(f"charge matrix Hermiticity defect {defect:.3e}")
    qm = 0.5 * (qm + qm.conj().T)
    u = np.array(u_tot, dtype=complex).reshape(dim, dim)
    cm = ChargeMatrix(
        Q=qm, basis_label="site", t0=t0, t1=t1, bond=bond,
        steps=steps, hermiticity_defect=defect,
    )
    rec = UnitaryRecord(
        U=u, t0=t0, t1=t1, steps=steps,
        unitarity_defect=float(np.linalg.norm(u.conj().T @ u - np.eye(dim))),
    )
    return cm, rec


def charge_and_propagator(
    spec: SystemSpec,
    proto: DrivingProtocol,
    bond: int = 1,
    t0: float | None = None,
    t1: float | None = None,
    *,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
):
    """Accumulate the charge operator and the propagator in a single pass."""
    return _charge_and_propagator(spec, proto, bond, t0, t1, dt_max, step_tol)


def charge_matrix(
    spec: SystemSpec,
    proto: DrivingProtocol,
    bond: int = 1,
    t0: float | None = None,
    t1: float | None = None,
    *,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
) -> ChargeMatrix:
    """Accumulate the Heisenberg-picture charge operator for one bond."""
    cm, _ = _charge_and_propagator(spec, proto, bond, t0, t1, dt_max, step_tol)
    return cm


# ---------------------------------------------------------------------------
# Spectral counting statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountingResult:
    """Spectral counting distribution and its moments."""

    mean: float
    variance: float
    spectrum: tuple        # ((Q_i, p_i), ...) ascending in Q_i
    moments: tuple         # <Q^k> for k = 0..k_max

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def counting_stats(qm: ChargeMatrix, psi0: np.ndarray, k_max: int = 4) -> CountingResult:
    """Diagonalize Q and weight its spectrum with the initial state.

    Mean and variance are cross-checked against the direct expectation
    values <Q> and <Q^2>; an inconsistency beyond 1e-9 (relative to the
    operator scale) trips a NumericalFailure.
    """
    psi0 = _check_state(psi0, qm.dim)
    es = eig_hermitian(qm.Q)
    amps = es.eigenvectors.conj().T @ psi0
    probs = np.abs(amps) ** 2
    qs = es.eigenvalues
    mean = float(probs @ qs)
    m2 = float(probs @ qs**2)
    variance = m2 - mean * mean
    if variance < 0.0:
        if variance < VARIANCE_CLIP * max(1.0, m2):
            raise NumericalFailure(f"variance {variance:.3e} below roundoff floor")
        log.info("clipping roundoff-negative variance %.3e to 0", variance)
        variance = 0.0
    direct = float((psi0.conj() @ (qm.Q @ psi0)).real)
    direct2 = float(np.linalg.norm(qm.Q @ psi0) ** 2)
    scale = max(1.0, m2)
    if abs(mean - direct) > 1e-9 * scale or abs(m2 - direct2) > 1e-9 * scale:
        raise NumericalFailure(
            "spectral and direct moments disagree: "
            f"mean {mean!r} vs {direct!r}, m2 {m2!r} vs {direct2!r}"
        )
    moments = tuple(float(probs @ qs**k) for k in range(k_max + 1))
    spectrum = tuple((float(q), float(p)) for q, p in zip(qs, probs))
    return CountingResult(mean=mean, variance=variance, spectrum=spectrum, moments=moments)


def q_parallel_perp(
    qm: ChargeMatrix,
    frame: AdiabaticFrame,
    branch: int | None = None,
    reduction_tol: float = 1e-6,
):
    """Split Q in the initial adiabatic basis into (Q_par, Q_perp).

    ``branch`` is the occupied adiabatic level (default: the lower branch of
    the frame's avoided-crossing pair).  For that preparation the mean
    equals Q_par identically, and the variance equals |Q_perp|^2 up to the
    charge weight carried by levels outside the two-level pair (identically
    zero for 2-site systems, checked to 1e-9 there).  That outside weight is
    the reduction-validity diagnostic: beyond ``reduction_tol`` the two-level
    picture is broken and ReductionInvalid is raised.
    """
    q_ad = qm.Q if qm.basis_label == "adiabatic_initial" else qm.to_adiabatic(frame).Q
    i, j = frame.crossing_pair
    n = i if branch is None else branch
    m = j if n == i else i
    q_par = float(q_ad[n, n].real)
    q_perp = complex(-1j * q_ad[n, m])
    var_full = float(np.sum(np.abs(q_ad[:, n]) ** 2) - q_ad[n, n].real ** 2)
    outside_weight = abs(var_full - abs(q_perp) ** 2)
    tol = 1e-9 if qm.dim == 2 else reduction_tol
    if outside_weight > tol:
        raise ReductionInvalid(
            f"charge weight {outside_weight:.3e} outside the two-level pair "
            f"exceeds {tol:.1e}; two-level reduction invalid for this protocol"
        )
    return q_par, q_perp


# ---------------------------------------------------------------------------
# Counting-field quasi-distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuasiDistribution:
    """Counting-field kernel chi(r) and the quasi-distribution P0(Q).

    P0 may take negative values; it is reported as-is.  ``mean`` and
    ``variance`` come from finite-difference derivatives of chi at r = 0
    (never tapered); ``spectral_*`` are the matching spectral-route values.
    """

    r_grid: np.ndarray
    chi: np.ndarray
    Q_grid: np.ndarray
    P0: np.ndarray
    mean: float
    variance: float
    spectral_mean: float
    spectral_variance: float
    norm: float
    taper: str
    stencil_h: float
    stencil: dict = field(repr=False)
    max_imag: float = 0.0

    def chi_moment3(self) -> float:
        """Third moment of P0 from chi derivatives (taper-free)."""
        h = self.stencil_h
        im_h = self.stencil[h].imag
        im_2h = self.stencil[2.0 * h].imag
        return (2.0 * im_h - im_2h) / h**3

    def grid_moment(self, k: int) -> float:
        """k-th moment of the tabulated (tapered) P0 on its grid."""
        dq = float(self.Q_grid[1] - self.Q_grid[0])
        return float(np.sum(self.P0 * self.Q_grid**k) * dq)


def fcs_default_grids(q_max: float, n_r: int = 65):
    """Conjugate (r, Q) grids: symmetric, odd-length, exactly normalizing.

    With dQ * dr = 2 pi / n the discrete Fourier sum preserves
    sum(P0) * dQ = chi(0) exactly, and the r spacing automatically satisfies
    the Nyquist bound for the chosen Q extent.
    """
    if n_r % 2 == 0 or n_r < 5:
        raise ValueError("n_r must be odd and >= 5")
    m = n_r // 2
    dq = q_max / m
    dr = 2.0 * math.pi / (n_r * dq)
    j = np.arange(-m, m + 1)
    return j * dr, j * dq


def _dressed_h_fn(h_fn, i_fn, dim, bond, shift):
    """Hermitian-flat evaluator for H + shift * I (shift real)."""
    if dim == 2:
        def h(t):
            d0, d1, u01 = h_fn(t)
            return (d0, d1, u01 + shift * i_fn(t)[1])
        return h
    if bond == 1:
        def h(t):
            d0, d1, d2, u01, u02, u12 = h_fn(t)
            return (d0, d1, d2, u01 + shift * i_fn(t)[1], u02, u12)
    else:
        def h(t):
            d0, d1, d2, u01, u02, u12 = h_fn(t)
            return (d0, d1, d2, u01, u02 + shift * i_fn(t)[2], u12)
    return h


def _replay_overlap(h_plus, h_minus, dim, psi0, step_seq):
    """Evolve psi0 under the two dressed generators along a fixed step
    sequence and return the overlap <psi-|psi+>."""
    if dim == 2:
        eig, expm, matvec = K.eig2, K.expm2, K.matvec2
    else:
        eig, expm, matvec = K.eig3, K.expm3, K.matvec3
    pp = tuple(psi0)
    pm = tuple(psi0)
    for tm, dt in step_seq:
        lams, v = eig(*h_plus(tm))
        pp = matvec(expm(lams, v, dt), pp)
        lams, v = eig(*h_minus(tm))
        pm = matvec(expm(lams, v, dt), pm)
    return sum(b.conjugate() * a for a, b in zip(pp, pm))


def fcs_quasi(
    spec: SystemSpec,
    proto: DrivingProtocol,
    bond: int,
    psi0: np.ndarray,
    r_grid: np.ndarray,
    Q_grid: np.ndarray,
    *,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
    taper: str = "hann",
    moment_tol: float = 1e-4,
    stencil_h: float = 0.05,
) -> QuasiDistribution:
    """Counting-field kernel chi(r) and quasi-distribution P0(Q).

    For each r the initial state is co-propagated under H -+ (r/2) I(t)
    (the time-ordered counting kernels); chi(r) is the overlap of the two
    branches.  All r points share the step sequence chosen adaptively at
    r = 0, which makes the chi-derivative moments exactly consistent with
    the accumulated charge operator.  P0 is the discrete Fourier transform
    of chi onto ``Q_grid`` with a raised-cosine r-taper (moments are always
    extracted untapered at r = 0).
    """
    r_grid = np.asarray(r_grid, dtype=float)
    Q_grid = np.asarray(Q_grid, dtype=float)
    if len(r_grid) < 3 or np.max(np.abs(r_grid + r_grid[::-1])) > 1e-12 * max(
        1.0, float(np.max(np.abs(r_grid)))
    ):
        raise GridTooCoarse("r_grid must be symmetric about 0")
    dr = np.diff(r_grid)
    if np.max(np.abs(dr - dr[0])) > 1e-9 * dr[0]:
        raise GridTooCoarse("r_grid must be uniform")
    q_max = float(np.max(np.abs(Q_grid)))
    if q_max > 0.0 and dr[0] > math.pi / q_max * (1.0 + 1e-12):
        raise GridTooCoarse(
            f"r spacing {dr[0]:.4g} violates the Nyquist bound pi/Q_max = "
            f"{math.pi / q_max:.4g}"
        )
    h_fn, dim = _h_flat_fn(spec, proto)
    psi0 = _check_state(psi0, dim)
    i_fn = _current_flat_fn(spec, proto, bond)
    # reference run at r = 0: fixes the step sequence and the spectral route
    seq: list = []
    cm, _ = _charge_and_propagator(
        spec, proto, bond, None, None, dt_max, step_tol, record=seq
    )
    spectral = counting_stats(cm, psi0, k_max=2)

    def chi_at(r: float) -> complex:
        hp = _dressed_h_fn(h_fn, i_fn, dim, bond, -0.5 * r)
        hm = _dressed_h_fn(h_fn, i_fn, dim, bond, +0.5 * r)
        return _replay_overlap(hp, hm, dim, psi0, seq)

    chi = np.array([chi_at(float(r)) for r in r_grid], dtype=complex)
    # taper for the Fourier inversion only
    r_max = float(np.max(np.abs(r_grid)))
    if taper == "hann" and r_max > 0.0:
        w = np.cos(0.5 * math.pi * r_grid / r_max) ** 2
    elif taper in (None, "none"):
        w = np.ones_like(r_grid)
        taper = "none"
    else:
        raise ValueError(f"unknown taper {taper!r}")
    phases = np.exp(-1j * np.outer(Q_grid, r_grid))
    p0_c = (dr[0] / (2.0 * math.pi)) * (phases @ (w * chi))
    max_imag = float(np.max(np.abs(p0_c.imag))) if len(p0_c) else 0.0
    p0 = p0_c.real
    dq = float(Q_grid[1] - Q_grid[0]) if len(Q_grid) > 1 else 1.0
    norm = float(np.sum(p0) * dq)
    # chi(0) = 1 holds exactly by unitarity
    i0 = int(np.argmin(np.abs(r_grid)))
    if abs(chi[i0] - 1.0) > 1e-10:
        raise NumericalFailure(f"chi(0) = {chi[i0]!r} deviates from 1")
    # untapered moments from chi derivatives at r = 0 (fourth-order stencils)
    h = stencil_h
    stencil = {s: chi_at(s) for s in (h, 2.0 * h, -h, -2.0 * h)}
    mean = (16.0 * stencil[h].imag - 2.0 * stencil[2 * h].imag) / (12.0 * h)
    m2 = (30.0 - 32.0 * stencil[h].real + 2.0 * stencil[2 * h].real) / (12.0 * h * h)
    variance = m2 - mean * mean
    if abs(mean - spectral.mean) > moment_tol or abs(variance - spectral.variance) > moment_tol:
        raise GridTooCoarse(
            "counting-field moments disagree with the spectral route: "
            f"mean {mean:.6g} vs {spectral.mean:.6g}, "
            f"var {variance:.6g} vs {spectral.variance:.6g}"
        )
    if abs(norm - 1.0) > 1e-6:
        raise GridTooCoarse(f"P0 normalization {norm!r} deviates from 1 beyond 1e-6")
    return QuasiDistribution(
        r_grid=r_grid,
        chi=chi,
        Q_grid=Q_grid,
        P0=p0,
        mean=float(mean),
        variance=float(variance),
        spectral_mean=spectral.mean,
        spectral_variance=spectral.variance,
        norm=norm,
        taper=taper,
        stencil_h=h,
        stencil=stencil,
        max_imag=max_imag,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def counting_result_rows(cs: CountingResult):
    """CSV-ready spectral rows: header plus one row per spectral point."""
    header = ["Q[particles]", "weight[1]"]
    return header, [[q, w] for q, w in cs.spectrum]


def counting_result_record(cs: CountingResult, **metadata) -> dict:
    """Full JSON-ready record; metadata (protocol digest, tolerances, step
    counts) is merged in verbatim."""
    return {
        "mean": cs.mean,
        "variance": cs.variance,
        "moments": list(cs.moments),
        "spectrum": [[q, w] for q, w in cs.spectrum],
        **metadata,
    }


def quasi_distribution_rows(qd: QuasiDistribution):
    """CSV-ready rows of the quasi-distribution grid."""
    header = ["Q[particles]", "P0[1/particles]"]
    return header, [[q, p] for q, p in zip(qd.Q_grid, qd.P0)]


def quasi_distribution_record(qd: QuasiDistribution, **metadata) -> dict:
    return {
        "mean": qd.mean,
        "variance": qd.variance,
        "spectral_mean": qd.spectral_mean,
        "spectral_variance": qd.spectral_variance,
        "norm": qd.norm,
        "taper": qd.taper,
        "stencil_h": qd.stencil_h,
        "r_grid": [float(r) for r in qd.r_grid],
        "chi_re": [float(z.real) for z in qd.chi],
        "chi_im": [float(z.imag) for z in qd.chi],
        "Q_grid": [float(q) for q in qd.Q_grid],
        "P0": [float(p) for p in qd.P0],
        **metadata,
    }


# ---------------------------------------------------------------------------
# Continuity and multi-cycle diagnostics
# ---------------------------------------------------------------------------


def continuity_check(
    spec: SystemSpec,
    proto: DrivingProtocol,
    psi0: np.ndarray | None = None,
    *,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
) -> float:
    """Max over time of |<Q_0->1> + <Q_0->2> - (n0(0) - n0(t))|.

    Both bond charges and the site-0 population are tracked along one
    trajectory with the shared frozen-midpoint discretization, for which the
    identity is exact; the returned defect is pure roundoff.
    """
    if spec.sites != 3:
        raise ValueError("continuity check is defined for the 3-site system")
    h_fn, dim = _h_flat_fn(spec, proto)
    psi0 = _check_state(psi0 if psi0 is not None else np.array([1.0, 0, 0]), dim)
    i1 = _current_flat_fn(spec, proto, 1)
    i2 = _current_flat_fn(spec, proto, 2)
    psi = tuple(complex(x) for x in psi0)
    n0_init = abs(psi[0]) ** 2
    q1 = 0.0
    q2 = 0.0
    worst = 0.0
    for tm, dt, lams, v, u_step in adaptive_steps(
        h_fn, dim, proto.t_start, proto.t_end, dt_max, step_tol, proto.breakpoints
    ):
        t1 = K.charge_step3(lams, v, i1(tm), dt)
        t2 = K.charge_step3(lams, v, i2(tm), dt)
        x1 = K.matvec3(t1, psi)
        x2 = K.matvec3(t2, psi)
        q1 += sum(p.conjugate() * x for p, x in zip(psi, x1)).real
        q2 += sum(p.conjugate() * x for p, x in zip(psi, x2)).real
        psi = K.matvec3(u_step, psi)
        n0 = abs(psi[0]) ** 2
        worst = max(worst, abs(q1 + q2 - (n0_init - n0)))
    return worst


def multi_cycle_spreading(
    spec: SystemSpec,
    cycle_proto: DrivingProtocol,
    psi0: np.ndarray,
    n_cycles: int,
    *,
    bond: int = 1,
    dt_max: float = 0.1,
    step_tol: float | None = 1e-10,
) -> np.ndarray:
    """Counting mean and spread after 1..n_cycles concatenated periods.

    One period is integrated once; concatenation uses the periodicity of the
    protocol, lifting the single-period charge operator through powers of
    the period propagator.  Returns an array with columns (n, mean, std).
    """
    if n_cycles < 8:
        raise ValueError("n_cycles must be at least 8 for a meaningful trend")
    cm, rec = _charge_and_propagator(
        spec, cycle_proto, bond, None, None, dt_max, step_tol
    )
    psi0 = _check_state(psi0, cm.dim)
    u_c = rec.U
    q_c = cm.Q
    q_acc = q_c.copy()
    u_pow = u_c.copy()
    rows = np.empty((n_cycles, 3))
    for n in range(1, n_cycles + 1):
        stats = counting_stats(
            ChargeMatrix(
                Q=0.5 * (q_acc + q_acc.conj().T),
                basis_label="site",
                t0=cm.t0,
                t1=cm.t0 + n * cycle_proto.duration,
                bond=bond,
                steps=cm.steps,
                hermiticity_defect=cm.hermiticity_defect,
            ),
            psi0,
            k_max=2,
        )
        rows[n - 1] = (n, stats.mean, stats.std)
        q_acc = q_acc + u_pow.conj().T @ q_c @ u_pow
        u_pow = u_c @ u_pow
    return rows

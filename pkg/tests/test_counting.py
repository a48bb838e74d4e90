import math

import numpy as np
import pytest
from scipy.linalg import expm as dense_expm

from stircount.analytic import single_path_spectrum
from stircount.counting import (
    ChargeMatrix,
    _charge_and_propagator,
    charge_matrix,
    continuity_check,
    counting_stats,
    fcs_default_grids,
    fcs_quasi,
    multi_cycle_spreading,
    q_parallel_perp,
)
from stircount.errors import GridTooCoarse, ReductionInvalid, UnnormalizedState
from stircount.model import (
    DrivingProtocol,
    SystemSpec,
    current_operator,
    hamiltonian,
    linear_ramp_lz,
    stir_cycle,
)
from stircount.propagation import adiabatic_frame, propagate

SPEC2 = SystemSpec(sites=2)
SPEC3 = SystemSpec(sites=3)
E0_2 = np.array([1.0, 0.0], dtype=complex)
E0_3 = np.array([1.0, 0.0, 0.0], dtype=complex)


def ramp_for_exponent(x, c=0.1, sites=2, lam=1.0, window_factor=40.0):
    """Linear sweep whose crossing exponent 2 pi c^2/udot equals x."""
    return linear_ramp_lz(
        c=c, udot=2.0 * math.pi * c * c / x, sites=sites, lam=lam,
        window_factor=window_factor,
    )


def test_zero_coupling_charge_is_zero():
    proto = DrivingProtocol(
        u=lambda t: 0.5 + 0.01 * t, c1=lambda t: 0.0, c2=lambda t: 0.0,
        t_start=0.0, t_end=50.0,
    )
    cm = charge_matrix(SPEC3, proto, dt_max=0.2)
    assert np.max(np.abs(cm.Q)) == 0.0


def test_charge_matrix_against_dense_oracle():
    # independent route: fixed-step midpoint Riemann accumulation built on
    # scipy's dense matrix exponential
    proto = linear_ramp_lz(c=0.1, udot=0.0906, u_span=4.0, sites=2)
    cm = charge_matrix(SPEC2, proto, dt_max=0.1)
    n = 20000
    ts = np.linspace(proto.t_start, proto.t_end, n + 1)
    dt = ts[1] - ts[0]
    u = np.eye(2, dtype=complex)
    q_ref = np.zeros((2, 2), dtype=complex)
    for k in range(n):
        tm = ts[k] + 0.5 * dt
        q_ref += u.conj().T @ current_operator(SPEC2, proto, tm, 1) @ u * dt
        u = dense_expm(-1j * hamiltonian(SPEC2, proto, tm) * dt) @ u
    assert np.max(np.abs(cm.Q - q_ref)) < 5e-5
    assert cm.hermiticity_defect < 1e-12


def test_charge_matrix_three_site_second_bond_oracle():
    proto = linear_ramp_lz(c=0.06, udot=0.01, u_span=1.5, sites=3, lam=0.4)
    cm = charge_matrix(SPEC3, proto, bond=2, dt_max=0.1)
    n = 30000
    ts = np.linspace(proto.t_start, proto.t_end, n + 1)
    dt = ts[1] - ts[0]
    u = np.eye(3, dtype=complex)
    q_ref = np.zeros((3, 3), dtype=complex)
    for k in range(n):
        tm = ts[k] + 0.5 * dt
        q_ref += u.conj().T @ current_operator(SPEC3, proto, tm, 2) @ u * dt
        u = dense_expm(-1j * hamiltonian(SPEC3, proto, tm) * dt) @ u
    assert np.max(np.abs(cm.Q - q_ref)) < 5e-5


def test_single_path_spectrum_is_sqrt_p():
    # the accumulated charge operator of any coherent 2-site scenario has
    # eigenvalues +-sqrt(p) with weights (1 +- sqrt(p))/2, p being the final
    # right occupation of a particle starting on the left
    for x in (0.2877, 0.6931, 2.3026):
        proto = ramp_for_exponent(x)
        cm = charge_matrix(SPEC2, proto, dt_max=0.1)
        p = abs(propagate(SPEC2, proto, dt_max=0.1).U[1, 0]) ** 2
        cs = counting_stats(cm, E0_2)
        expected = single_path_spectrum(p)
        for (q, w), (q_ref, w_ref) in zip(cs.spectrum, expected):
            assert q == pytest.approx(q_ref, abs=1e-6)
            assert w == pytest.approx(w_ref, abs=1e-6)
        # moment ladder p^floor((k+1)/2)
        for k in range(5):
            assert cs.moments[k] == pytest.approx(p ** ((k + 1) // 2), abs=1e-6)


def test_counting_stats_projector_difference_algebra():
    # synthetic oracle: U a real rotation by theta; Q = U^dag n1 U - n1 has
    # eigenvalues +-sin(theta) and weights (1 +- sin(theta))/2 exactly
    theta = math.asin(0.5)  # p = 0.25
    u = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    n1 = np.diag([0.0, 1.0])
    q = u.T @ n1 @ u - n1
    cm = ChargeMatrix(
        Q=q.astype(complex), basis_label="site", t0=0.0, t1=1.0, bond=1,
        steps=0, hermiticity_defect=0.0,
    )
    cs = counting_stats(cm, E0_2, k_max=4)
    assert cs.spectrum[0] == pytest.approx((-0.5, 0.25), abs=1e-12)
    assert cs.spectrum[1] == pytest.approx((0.5, 0.75), abs=1e-12)
    assert cs.moments == pytest.approx((1.0, 0.25, 0.25, 0.0625, 0.0625), abs=1e-12)
    assert cs.mean == pytest.approx(0.25, abs=1e-12)
    assert cs.variance == pytest.approx(0.25 - 0.0625, abs=1e-12)


def test_counting_stats_eigenstate_has_zero_variance():
    q = np.diag([0.3, -0.3]).astype(complex)
    cm = ChargeMatrix(
        Q=q, basis_label="site", t0=0.0, t1=1.0, bond=1, steps=0,
        hermiticity_defect=0.0,
    )
    cs = counting_stats(cm, np.array([1.0, 0.0], dtype=complex))
    assert cs.variance == pytest.approx(0.0, abs=1e-15)


def test_counting_stats_rejects_unnormalized():
    cm = ChargeMatrix(
        Q=np.zeros((2, 2), dtype=complex), basis_label="site", t0=0.0, t1=1.0,
        bond=1, steps=0, hermiticity_defect=0.0,
    )
    with pytest.raises(UnnormalizedState):
        counting_stats(cm, np.array([1.0, 1.0], dtype=complex))


def test_double_path_mean_is_half_at_balanced_split():
    proto = linear_ramp_lz(
        c=0.05, udot=2 * math.pi * 0.0025 / 7.5, u_span=1.5, sites=3, lam=0.5
    )
    cm = charge_matrix(SPEC3, proto, dt_max=0.1, step_tol=1e-9)
    mean = float((E0_3.conj() @ cm.Q @ E0_3).real)
    assert mean == pytest.approx(0.5, abs=1e-2)


def test_q_parallel_perp_single_path():
    # restricted correspondence: Q_par = 1 - P and |Q_perp| = sqrt((1-P)P)
    for x in (3.0, 1.6094, 0.6931):
        p_lz = math.exp(-x)
        proto = ramp_for_exponent(x)
        cm = charge_matrix(SPEC2, proto, dt_max=0.1)
        frame = adiabatic_frame(SPEC2, proto, 2001)
        q_par, q_perp = q_parallel_perp(cm, frame)
        assert q_par == pytest.approx(1.0 - p_lz, rel=0.02)
        assert abs(q_perp) == pytest.approx(math.sqrt((1.0 - p_lz) * p_lz), rel=0.02)


def test_q_parallel_perp_zero_protocol():
    proto = DrivingProtocol(
        u=lambda t: 0.8 + 0.001 * t, c1=lambda t: 0.0, c2=lambda t: 0.0,
        t_start=0.0, t_end=10.0,
    )
    cm = charge_matrix(SPEC3, proto, dt_max=0.1)
    frame = adiabatic_frame(SPEC3, proto, 201)
    q_par, q_perp = q_parallel_perp(cm, frame)
    assert q_par == 0.0
    assert abs(q_perp) == 0.0


def test_fcs_trivial_protocol():
    proto = DrivingProtocol(
        u=lambda t: 0.5, c1=lambda t: 0.0, c2=lambda t: 0.0,
        t_start=0.0, t_end=5.0,
    )
    r_grid, q_grid = fcs_default_grids(1.5, 17)
    qd = fcs_quasi(SPEC3, proto, 1, E0_3, r_grid, q_grid, dt_max=0.2)
    assert np.max(np.abs(qd.chi - 1.0)) < 1e-12
    assert qd.mean == pytest.approx(0.0, abs=1e-12)
    assert qd.variance == pytest.approx(0.0, abs=1e-9)
    assert qd.norm == pytest.approx(1.0, abs=1e-12)
    # a grid-limited delta at Q = 0: the raised-cosine taper smears it over
    # the central three bins (kernel weights 1/4, 1/2, 1/4)
    i0 = int(np.argmin(np.abs(qd.Q_grid)))
    dq = qd.Q_grid[1] - qd.Q_grid[0]
    assert float(np.sum(qd.P0[i0 - 1 : i0 + 2])) * dq == pytest.approx(1.0, abs=0.05)
    assert np.max(np.abs(qd.P0[: i0 - 1])) * dq < 0.02


def test_fcs_moment_identity_and_symmetry():
    proto = linear_ramp_lz(c=0.1, udot=0.0906, u_span=4.0, sites=2)
    r_grid, q_grid = fcs_default_grids(2.0, 33)
    qd = fcs_quasi(SPEC2, proto, 1, E0_2, r_grid, q_grid, dt_max=0.1)
    assert qd.mean == pytest.approx(qd.spectral_mean, abs=1e-4)
    assert qd.variance == pytest.approx(qd.spectral_variance, abs=1e-4)
    assert qd.norm == pytest.approx(1.0, abs=1e-10)
    # chi(-r) = conj(chi(r)) and chi(0) = 1
    assert np.max(np.abs(qd.chi - np.conj(qd.chi[::-1]))) < 1e-10
    i0 = int(np.argmin(np.abs(qd.r_grid)))
    assert abs(qd.chi[i0] - 1.0) < 1e-12
    assert qd.max_imag < 1e-12


def test_fcs_quasi_distribution_negative_yet_normalized():
    # the quasi-distribution may go negative; clipping would break moments
    proto = linear_ramp_lz(c=0.1, udot=0.0906, u_span=4.0, sites=2)
    r_grid, q_grid = fcs_default_grids(2.0, 33)
    qd = fcs_quasi(SPEC2, proto, 1, E0_2, r_grid, q_grid, dt_max=0.1)
    assert qd.P0.min() < -1e-3
    assert qd.norm == pytest.approx(1.0, abs=1e-10)


def test_fcs_third_moment_departs_from_spectral_ladder():
    # the measured quasi-distribution shares the first two moments with the
    # spectral distribution but departs at k = 3; the departure is recorded,
    # not asserted against any closed form
    proto = ramp_for_exponent(0.6931)  # p ~ 0.5
    r_grid, q_grid = fcs_default_grids(2.0, 33)
    qd = fcs_quasi(SPEC2, proto, 1, E0_2, r_grid, q_grid, dt_max=0.1)
    cm = charge_matrix(SPEC2, proto, dt_max=0.1)
    spec_m3 = counting_stats(cm, E0_2, k_max=3).moments[3]
    departure = abs(qd.chi_moment3() - spec_m3)
    assert departure > 0.01
    assert abs(qd.mean - qd.spectral_mean) < 1e-4


def test_fcs_grid_contracts():
    proto = linear_ramp_lz(c=0.1, udot=0.2, u_span=2.0, sites=2)
    r_grid, q_grid = fcs_default_grids(2.0, 17)
    with pytest.raises(GridTooCoarse):
        fcs_quasi(SPEC2, proto, 1, E0_2, r_grid * 3.0, q_grid, dt_max=0.1)
    with pytest.raises(GridTooCoarse):
        fcs_quasi(SPEC2, proto, 1, E0_2, r_grid + 0.1, q_grid, dt_max=0.1)


def test_continuity_zero_coupling():
    proto = DrivingProtocol(
        u=lambda t: 0.5 + 0.01 * t, c1=lambda t: 0.0, c2=lambda t: 0.0,
        t_start=0.0, t_end=20.0,
    )
    assert continuity_check(SPEC3, proto, dt_max=0.2) <= 1e-12


def test_continuity_stir_cycle():
    proto = stir_cycle(0.05, 0.8, 0.3, udot=0.01)
    assert continuity_check(SPEC3, proto, dt_max=0.1, step_tol=1e-9) <= 1e-8


def test_continuity_single_bond():
    # with one outlet the bond charge equals the population drop exactly
    proto = linear_ramp_lz(c=0.05, udot=0.005, u_span=1.2, sites=3, lam=1.0)
    assert continuity_check(SPEC3, proto, dt_max=0.1, step_tol=1e-9) <= 1e-8


def test_continuity_requires_three_sites():
    proto = linear_ramp_lz(c=0.1, udot=0.1, u_span=2.0, sites=2)
    with pytest.raises(ValueError):
        continuity_check(SPEC2, proto)


def test_multi_cycle_rows_and_growth():
    proto = stir_cycle(0.05, 0.9, 0.1, udot=2 * math.pi * 0.0025 / 3.0, u_delta=0.5)
    psi0 = np.array([1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)
    rows = multi_cycle_spreading(SPEC3, proto, psi0, 8, dt_max=0.1, step_tol=1e-9)
    assert rows.shape == (8, 3)
    assert np.array_equal(rows[:, 0], np.arange(1, 9))
    # the spread grows with the cycle count for a generic preparation
    assert rows[-1, 2] > 3.0 * rows[0, 2]
    with pytest.raises(ValueError):
        multi_cycle_spreading(SPEC3, proto, psi0, 4)


def test_q_parallel_perp_destructive_dwell():
    # equal-ratio cycle with the dwell tuned so the two crossing
    # contributions to Q_perp cancel; complete destructive interference of
    # the counting fluctuation.  The cancellation sits where the
    # Stokes-corrected phase difference is 0 mod 2pi (pi-shifted from the
    # naive sum of two like-signed terms; see the repository notes).
    from scipy.special import loggamma

    from stircount.propagation import adiabatic_frame, dynamical_phase

    lam, c, x = 0.5, 0.05, 3.0
    udot = 2 * math.pi * c * c / x
    p_lz = math.exp(-x)
    delta = x / (2.0 * math.pi)
    stokes = math.pi / 4 + delta * (math.log(delta) - 1.0) + float(
        np.imag(loggamma(1.0 - 1j * delta))
    )
    base = stir_cycle(c, lam, lam, udot=udot, dwell=0.0, u_delta=0.75, edge_frac=0.15)
    frame0 = adiabatic_frame(SPEC3, base, 3001)
    ph0 = dynamical_phase(frame0)
    phi_base = ph0.phi2 - ph0.phi1
    dwell = ((-phi_base - 2.0 * stokes) % (2.0 * math.pi)) / 0.75
    proto = stir_cycle(c, lam, lam, udot=udot, dwell=dwell, u_delta=0.75, edge_frac=0.15)
    frame = adiabatic_frame(SPEC3, proto, 3001)
    cm = charge_matrix(SPEC3, proto, dt_max=0.1, step_tol=1e-9)
    _, q_perp = q_parallel_perp(cm, frame)
    assert abs(q_perp) ** 2 <= 0.05 * (4.0 * lam * lam * p_lz)


def test_q_parallel_perp_flags_broken_reduction():
    # a fast cycle scatters charge weight onto the far level; the validity
    # gate must refuse the two-level split (the coupling softcheck also
    # fires: this protocol is outside the small-coupling regime)
    with pytest.warns(UserWarning):
        proto = stir_cycle(0.18, 0.9, 0.1, udot=0.2, u_delta=0.9, edge_frac=0.05)
    frame = adiabatic_frame(SPEC3, proto, 4001)
    cm = charge_matrix(SPEC3, proto, dt_max=0.05, step_tol=1e-10)
    with pytest.raises(ReductionInvalid):
        q_parallel_perp(cm, frame)


def test_serialization_records():
    import json

    from stircount.counting import (
        counting_result_record,
        counting_result_rows,
        quasi_distribution_record,
        quasi_distribution_rows,
    )
    from stircount.model import protocol_digest

    proto = ramp_for_exponent(0.6931)
    cm, _ = _charge_and_propagator(SPEC2, proto, 1, None, None, 0.1, 1e-10)
    cs = counting_stats(cm, E0_2)
    header, rows = counting_result_rows(cs)
    assert header == ["Q[particles]", "weight[1]"]
    assert len(rows) == 2
    rec = counting_result_record(
        cs, protocol=protocol_digest(proto), steps=cm.steps, step_tol=1e-10
    )
    text = json.dumps(rec, sort_keys=True)
    assert "sha256:" in text and '"steps"' in text
    r_grid, q_grid = fcs_default_grids(1.5, 17)
    qd = fcs_quasi(SPEC2, proto, 1, E0_2, r_grid, q_grid, dt_max=0.1)
    h2, rows2 = quasi_distribution_rows(qd)
    assert len(rows2) == 17
    rec2 = quasi_distribution_record(qd, protocol=protocol_digest(proto))
    json.dumps(rec2)
    assert rec2["norm"] == pytest.approx(1.0, abs=1e-10)

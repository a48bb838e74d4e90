import math

import numpy as np
import pytest

from stircount.analytic import (
    CyclePrediction,
    LZParams,
    classical_double_path_variance,
    double_path_moments,
    fgr_scale,
    lz_probability,
    residual_occupation,
    single_path_moments,
    single_path_spectrum,
    stirring_charge,
    stirring_variance,
)
from stircount.errors import OutOfRange


def test_lz_probability_limits():
    assert lz_probability(LZParams(c=0.0, udot=0.3)) == 1.0
    assert lz_probability(LZParams(c=0.2, udot=1e-9)) == pytest.approx(0.0, abs=1e-300)
    assert lz_probability(LZParams(c=0.1, udot=0.02 * math.pi)) == pytest.approx(
        math.exp(-1.0)
    )
    with pytest.raises(ValueError):
        LZParams(c=0.1, udot=0.0)


def test_single_path_moment_ladder():
    assert single_path_moments(0.7, 0) == 1.0
    assert single_path_moments(0.25, 1) == pytest.approx(0.25)
    assert single_path_moments(0.25, 2) == pytest.approx(0.25)
    assert single_path_moments(0.25, 3) == pytest.approx(0.0625)
    assert single_path_moments(0.25, 4) == pytest.approx(0.0625)
    with pytest.raises(OutOfRange):
        single_path_moments(1.2, 1)


def test_single_path_spectrum_p025():
    (qm, pm), (qp, pp) = single_path_spectrum(0.25)
    assert (qm, pm) == pytest.approx((-0.5, 0.25))
    assert (qp, pp) == pytest.approx((0.5, 0.75))


def test_moment_ladder_matches_spectrum():
    for p in np.linspace(0.0, 1.0, 21):
        spec = single_path_spectrum(p)
        for k in range(6):
            direct = sum(w * q**k for q, w in spec)
            assert direct == pytest.approx(single_path_moments(p, k), abs=1e-12)


def test_restricted_correspondence_and_k3_departure():
    # k = 1, 2 match the classical values p and p; k = 3 departs unless
    # p is 0 or 1
    for p in (0.1, 0.5, 0.9):
        assert single_path_moments(p, 1) == pytest.approx(p)
        assert single_path_moments(p, 2) == pytest.approx(p)
        assert single_path_moments(p, 3) != pytest.approx(p, abs=1e-6)
    for p in (0.0, 1.0):
        assert single_path_moments(p, 3) == pytest.approx(p)


def test_double_path_moments():
    assert double_path_moments(1.0, 0.3) == pytest.approx((0.3, 0.3 * 0.7))
    assert double_path_moments(0.5, 1.0) == pytest.approx((0.5, 0.0))
    mean, var = double_path_moments(1.7, 1.0)
    assert mean == pytest.approx(1.7)
    assert var == pytest.approx(0.0)
    # the companion path carries the complement
    mean2, _ = double_path_moments(1.0 - 1.7, 1.0)
    assert mean2 == pytest.approx(-0.7)


def test_single_double_reduction_consistency():
    for p in np.linspace(0.0, 1.0, 11):
        assert double_path_moments(1.0, p)[0] == pytest.approx(
            single_path_moments(p, 1)
        )


def test_classical_contrast():
    assert classical_double_path_variance(0.5, 1.0) == pytest.approx(0.25)
    assert classical_double_path_variance(0.7, 0.0) == 0.0
    assert classical_double_path_variance(1.0, 0.5) == pytest.approx(0.25)
    with pytest.raises(OutOfRange):
        classical_double_path_variance(1.7, 1.0)


def test_stirring_charge():
    assert stirring_charge(0.5, 0.5) == 0.0
    assert stirring_charge(1.0, 0.0) == 1.0
    assert stirring_charge(1.7, -0.7) == pytest.approx(2.4)


def test_stirring_variance_interference():
    assert stirring_variance(CyclePrediction(0.5, 0.5, 0.0, 0.0)) == 0.0
    lam, p = 0.4, 0.03
    assert stirring_variance(CyclePrediction(lam, lam, math.pi, p)) == pytest.approx(
        0.0, abs=1e-30
    )
    assert stirring_variance(CyclePrediction(lam, lam, 0.0, p)) == pytest.approx(
        4.0 * lam * lam * p
    )
    # single crossing scaled by the splitting ratio
    assert stirring_variance(CyclePrediction(lam, 0.0, 1.234, p)) == pytest.approx(
        lam * lam * p
    )


def test_residual_occupation_anticorrelation():
    p = 0.04
    assert residual_occupation(0.0, p) == 0.0
    assert residual_occupation(math.pi, p) == pytest.approx(4.0 * p)
    assert residual_occupation(0.3, 0.0) == 0.0
    # where the equal-ratio variance is maximal the residual vanishes and
    # vice versa; their product is symmetric under phi -> pi - phi
    lam = 0.5
    for phi in np.linspace(0.0, math.pi, 33):
        var = stirring_variance(CyclePrediction(lam, lam, phi, p))
        res = residual_occupation(phi, p)
        expected = 16.0 * lam**2 * p**2 * math.sin(0.5 * phi) ** 2 * math.cos(0.5 * phi) ** 2
        assert var * res == pytest.approx(expected, abs=1e-12)
        mirrored = stirring_variance(
            CyclePrediction(lam, lam, math.pi - phi, p)
        ) * residual_occupation(math.pi - phi, p)
        assert var * res == pytest.approx(mirrored, abs=1e-12)


def test_fgr_scale():
    assert fgr_scale(0.0, 5.0) == 1.0
    assert fgr_scale(2.0, 10.0) == pytest.approx(math.exp(-20.0))
    assert fgr_scale(2.0, 10.0) == pytest.approx(2.1e-9, rel=0.02)
    # the crossing substitution reproduces the c^2/udot exponent scale
    c, udot = 0.07, 0.003
    assert fgr_scale(c, c / udot) == pytest.approx(math.exp(-(c * c) / udot))


def test_output_ranges():
    rng = np.random.default_rng(11)
    for _ in range(200):
        p = rng.uniform(0.0, 1.0)
        lam = rng.uniform(-2.0, 2.0)
        phi = rng.uniform(-7.0, 7.0)
        assert 0.0 <= lz_probability(LZParams(c=rng.uniform(0, 0.3), udot=rng.uniform(1e-3, 1))) <= 1.0
        assert double_path_moments(lam, p)[1] >= 0.0
        assert stirring_variance(CyclePrediction(lam, rng.uniform(-2, 2), phi, p)) >= 0.0
        assert residual_occupation(phi, p) >= 0.0

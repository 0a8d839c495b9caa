import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_minimise, j0_series
from superdet.detection_model import (
    MU_SQ_SQL,
    SQUEEZED_FLOOR,
    Branch,
    NoiseBudget,
    NoSignalError,
    PsdModel,
    added_noise,
    band_min_snr,
    golden_section_min,
    heterodyne_frequency_map,
    noise_budget,
    psd,
    snr,
    sql_optimize,
    squeezed_noise_floor,
    witness,
)
from superdet.response_core import DetectorGeometry


def test_added_noise_at_sql():
    assert added_noise(-1.0, 2 * math.sqrt(2 / 3)) == pytest.approx(0.2247448713915890, abs=1e-15)
    assert added_noise(+1.0, 2 * math.sqrt(2 / 3)) == pytest.approx(2.2247448713915890, abs=1e-15)


def test_added_noise_simple():
    assert added_noise(-0.3, 1.0) == 0.375
    assert added_noise(0.0, 1.0) == 1.375


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_added_noise_rejects_nonpositive_coupling(bad):
    with pytest.raises(ValueError):
        added_noise(-1.0, bad)


def test_budget_decomposition():
    rng = np.random.default_rng(11)
    nu = rng.uniform(-10, 10, 1000)
    mu = rng.uniform(1e-2, 1e2, 1000)
    for n, m in zip(nu, mu):
        b = NoiseBudget(m)
        assert b.total(n) == b.imprecision + b.backaction + b.cross(n)
        assert b.total(n) == added_noise(n, m)


@given(st.floats(-1e3, 1e3).filter(lambda v: v != 0), st.floats(1e-4, 1e4))
def test_noise_positive_away_from_zero(nu, mu_sq):
    assert added_noise(nu, mu_sq) > 0


def test_sql_closed_form_and_golden_agree():
    r = sql_optimize()
    assert r.mu_sq_opt == pytest.approx(1.6329931618554521, abs=1e-15)
    assert abs(r.mu_sq_numeric - r.mu_sq_opt) < 1e-8
    assert r.noise_at_opt_neg == pytest.approx(0.22474487139158905, abs=1e-14)
    assert r.noise_at_opt_pos == pytest.approx(2.2247448713915890, abs=1e-14)
    assert r.curvature > 0


def test_sql_against_brute_force_scan():
    opt = brute_minimise(lambda u: 1 / u + 3 * u / 8, 0.1, 10.0)
    assert opt == pytest.approx(MU_SQ_SQL, abs=1e-6)


def test_golden_section_on_known_function():
    assert golden_section_min(lambda x: (x - 0.3) ** 2, -2.0, 5.0) == pytest.approx(0.3, abs=1e-7)


def test_squeezed_floor():
    s = squeezed_noise_floor()
    assert s.floor == pytest.approx(0.19371294336139656, abs=1e-15)
    assert s.improvement == pytest.approx(0.13807624546912729, abs=1e-12)
    assert s.floor < s.sql_floor
    assert 0.10 < s.improvement < 0.15


def test_psd_sum_positive_frequency():
    g = DetectorGeometry.from_separation(1.3)
    mu = 0.8
    assert psd("sum", 0.4, mu, g) == pytest.approx(0.5 * mu * (1 / mu + 3 * mu / 8 + 1), rel=1e-15)


def test_sum_minus_difference_is_interference():
    g = DetectorGeometry.from_separation(1.0, 2.0)
    for nu in (-0.3, -1.0, -4.0):
        s = psd(Branch.SUM, nu, 1.2, g)
        d = psd(Branch.DIFFERENCE, nu, 1.2, g)
        assert s - d == pytest.approx(1.2 * j0_series(nu * 0.5), abs=1e-12)


def test_psd_positivity_grid():
    rng = np.random.default_rng(5)
    nu = rng.uniform(-20, 20, 400)
    nu = nu[nu != 0]
    for mu in (1e-3, 0.1, 1.0, MU_SQ_SQL, 10.0, 1e3):
        for d in (0.0, 0.5, 3.0, 17.0):
            g = DetectorGeometry.from_separation(d)
            for br in Branch:
                assert np.all(psd(br, nu, mu, g) > 0)
                assert np.all(psd(br, nu, mu, g, squeezed=True) > 0)


def test_psd_squeezed_replaces_negative_side_only():
    g = DetectorGeometry.from_separation(1.0)
    neg = psd("sum", -0.5, MU_SQ_SQL, g, squeezed=True)
    assert neg == pytest.approx(0.5 * MU_SQ_SQL * (float(g.delta) * 0 + 1 + j0_series(0.5) + SQUEEZED_FLOOR))
    assert psd("sum", 0.5, MU_SQ_SQL, g, squeezed=True) == psd("sum", 0.5, MU_SQ_SQL, g)


def test_snr_values():
    g = DetectorGeometry.from_separation(1.0)
    assert snr(-1e-9, g) == pytest.approx(10.324555320336759, rel=1e-9)
    assert snr(-1.0, g) == pytest.approx(9.1124405830990958, rel=1e-12)
    assert snr(-1.0, g, squeezed=False) == pytest.approx((1 + j0_series(1.0)) / (math.sqrt(1.5) - 1))


def test_snr_band_minimum_at_edge():
    g = DetectorGeometry.from_separation(2.0, 3.0)
    edge = -g.c_s / g.delta
    val, where = band_min_snr(edge, g)
    assert where == edge
    assert val > 9
    grid = edge * (1 - np.arange(200) / 200)
    assert np.all(np.diff(snr(grid, g)) >= 0)


def test_snr_rejects_nonnegative_gap():
    g = DetectorGeometry.from_separation(1.0)
    with pytest.raises(NoSignalError):
        snr(0.0, g)
    with pytest.raises(NoSignalError):
        snr(0.2, g)


def test_witness_properties():
    g = DetectorGeometry.from_separation(1.0)
    for mu in (0.1, 1.0, 40.0):
        assert witness(0.7, mu, g) == 0.0
    assert witness(-0.5, 2.5, DetectorGeometry.from_separation(0.0)) == pytest.approx(2.5, rel=1e-15)
    nu = np.linspace(-5, 5, 101)
    assert np.all(witness(nu, 1.7, g, single_trajectory=True) == 0.0)


@given(st.floats(-30, -1e-6), st.floats(1e-3, 1e3), st.floats(0, 10))
def test_witness_identity(nu, mu, d):
    g = DetectorGeometry.from_separation(d)
    assert witness(nu, mu, g) == pytest.approx(mu * j0_series(nu * d), abs=1e-12 * max(1.0, mu))


def test_heterodyne_map():
    assert heterodyne_frequency_map(0.0, 3.0) == 3.0
    assert heterodyne_frequency_map(3.0, 3.0) == 0.0
    rng = np.random.default_rng(2)
    nu = rng.uniform(-100, 100, 100)
    # a - (a - x) is exact only up to one rounding of a - x
    np.testing.assert_allclose(heterodyne_frequency_map(heterodyne_frequency_map(nu, 7.5), 7.5), nu, rtol=0, atol=2e-14)
    with pytest.raises(ValueError):
        heterodyne_frequency_map(1.0, 0.0)


def test_psd_model_callable_matches_function():
    g = DetectorGeometry.from_separation(0.7)
    m = PsdModel("difference", 1.1, g, squeezed=True)
    nu = np.linspace(-3, 3, 31)
    np.testing.assert_array_equal(m(nu), psd("difference", nu, 1.1, g, squeezed=True))
    assert m.budget == noise_budget(1.1, True)

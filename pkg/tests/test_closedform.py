import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nfma.analog import init_phases, min_snr, min_snr_upper_bound
from nfma.arrays import RegionSpec, validate
from nfma.channel import ArrayGeometry, UserChannel, channel_matrix
from nfma.closedform import (check_analog_condition, check_digital_condition,
                             construct_analog_apv, construct_digital_apv, decompose,
                             path_difference)
from nfma.digital import min_sinr_upper_bound, zf_min_sinr
from nfma.exceptions import Infeasible, Unsupported

from conftest import LAM, NOISE_MW, P_MW, random_users

REGION = RegionSpec(100 * LAM, LAM / 2)


def test_decompose_examples():
    d = decompose(1.7 * LAM, LAM)
    assert d.n == 1 and d.phi == pytest.approx(0.7)
    d = decompose(-0.3 * LAM, LAM)
    assert d.n == -1 and d.phi == pytest.approx(0.7)
    d = decompose(0.0, LAM)
    assert d.n == 0 and d.phi == 0.0
    with pytest.raises(ValueError):
        decompose(1.0, 0.0)


@given(st.floats(-1e3, 1e3, allow_nan=False), st.floats(1e-3, 1.0))
def test_decompose_exact(delta, lam):
    d = decompose(delta, lam)
    assert 0 <= d.phi < 1
    assert abs(lam * (d.n + d.phi) - delta) <= 1e-12 * lam + 4 * np.spacing(abs(delta))


def _users(rng):
    return random_users(rng, 2)


def _geom_with_phis(users, phis, region=REGION):
    """Centers on hyperbolas with the requested fractional parts (by construction of M=1 slices)."""
    from nfma.closedform import _LocusFinder, _levels, _place
    s1, s2 = users[0].anchors[0], users[1].anchors[0]
    finder = _LocusFinder(s1, s2, region.half)
    slots = [_levels(finder, phi % 1.0, LAM) for phi in phis]
    return ArrayGeometry(_place(slots, finder, len(phis), region.d_min), region_half=region.half,
                         d_min=region.d_min)


def test_check_digital_examples():
    rng = np.random.default_rng(1)
    users = _users(rng)
    g = _geom_with_phis(users, [0.0, 0.5])
    rep = check_digital_condition(g, users, LAM)
    assert rep.passed and rep.residuals[(0, 1)] <= 1e-8
    g = _geom_with_phis(users, [0.3, 0.3, 0.3])
    rep = check_digital_condition(g, users, LAM)
    assert not rep.passed and rep.residuals[(0, 1)] == pytest.approx(3.0, rel=1e-9)
    data = json.loads(rep.to_json())
    assert data["passed"] is False and data["residuals"][0]["users"] == [0, 1]


def test_check_analog_examples():
    rng = np.random.default_rng(2)
    users = _users(rng)
    g = _geom_with_phis(users, [0.25, 0.25])
    rep = check_analog_condition(g, users, LAM)
    assert rep.passed
    g = _geom_with_phis(users, [0.25, 0.5])
    assert not check_analog_condition(g, users, LAM).passed


def test_checks_unsupported():
    rng = np.random.default_rng(3)
    users = _users(rng)
    g = ArrayGeometry([[0, 0], [0.1, 0]], [[0, 0], [LAM / 2, 0]])
    with pytest.raises(Unsupported):
        check_digital_condition(g, users, LAM)
    multi = random_users(rng, 2, n_nlos=1)
    with pytest.raises(Unsupported):
        check_analog_condition(ArrayGeometry([[0, 0], [0.1, 0]]), multi, LAM)


@pytest.mark.parametrize("seed", range(5))
def test_construct_digital(seed):
    rng = np.random.default_rng(seed)
    users = _users(rng)
    g = construct_digital_apv(users, 8, REGION, LAM)
    assert validate(g) == [] and g.M == 8
    assert check_digital_condition(g, users, LAM).passed
    H = channel_matrix(g, users, LAM)
    assert abs(np.vdot(H[:, 0], H[:, 1])) <= 1e-8 * np.linalg.norm(H, axis=0).prod()
    bound = min_sinr_upper_bound(users, 8, 1, P_MW, NOISE_MW)[0]
    assert 10 * np.log10(bound / zf_min_sinr(g, users, P_MW, NOISE_MW, LAM)) <= 0.01


def test_construct_digital_symmetric_pair():
    users = [UserChannel.single_path([-5, -15, 30], 1e-4), UserChannel.single_path([5, -15, 30],
                                                                                    1e-4)]
    g = construct_digital_apv(users, 2, REGION, LAM)
    H = channel_matrix(g, users, LAM)
    assert abs(np.vdot(H[:, 0], H[:, 1])) / (np.linalg.norm(H[:, 0]) *
                                             np.linalg.norm(H[:, 1])) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("M", [2, 4, 8])
def test_construct_analog(seed, M):
    rng = np.random.default_rng(seed)
    users = _users(rng)
    g = construct_analog_apv(users, M, REGION, LAM)
    assert validate(g) == [] and g.M == M
    rep = check_analog_condition(g, users, LAM)
    assert rep.passed and rep.residuals[(0, 1)] <= 1e-10
    phi = init_phases(g, users, LAM)
    bound = min_snr_upper_bound(users, M, 1, P_MW, NOISE_MW)
    assert 10 * np.log10(bound / min_snr(g, phi, users, P_MW, NOISE_MW, LAM)) <= 0.01


def test_construct_analog_spans_branches():
    rng = np.random.default_rng(7)
    users = _users(rng)
    g = construct_analog_apv(users, 4, REGION, LAM)
    n = {decompose(d, LAM).n for d in path_difference(g.centers, users[0].anchors[0],
                                                     users[1].anchors[0])}
    assert len(n) >= 2  # integer parts differ while the fraction is shared


def test_construct_infeasible():
    users = _users(np.random.default_rng(0))
    with pytest.raises(Infeasible):
        construct_digital_apv(users, 8, RegionSpec(0.2 * LAM, LAM / 2), LAM)
    with pytest.raises(Infeasible):
        construct_analog_apv(users, 8, RegionSpec(0.2 * LAM, LAM / 2), LAM)
    with pytest.raises(Infeasible):
        construct_digital_apv(users, 1, REGION, LAM)


def test_construct_unsupported():
    rng = np.random.default_rng(0)
    with pytest.raises(Unsupported):
        construct_digital_apv(random_users(rng, 3), 8, REGION, LAM)
    with pytest.raises(Unsupported):
        construct_analog_apv(random_users(rng, 2, n_nlos=1), 8, REGION, LAM)


@pytest.mark.parametrize("seed", range(5))
def test_perturbation_breaks_conditions(seed):
    rng = np.random.default_rng(seed)
    users = _users(rng)
    s1, s2 = users[0].anchors[0], users[1].anchors[0]
    for construct, check in ((construct_digital_apv, check_digital_condition),
                             (construct_analog_apv, check_analog_condition)):
        g = construct(users, 8, REGION, LAM)
        c = g.centers.copy()
        # move along the path-difference gradient so the fraction shifts
        t = np.r_[c[0], 0.0]
        grad = ((t - s1) / np.linalg.norm(t - s1) - (t - s2) / np.linalg.norm(t - s2))[:2]
        c[0] += LAM / 4 * grad / np.linalg.norm(grad)
        gp = ArrayGeometry(c, region_half=g.region_half)
        assert not check(gp, users, LAM).passed
        if construct is construct_digital_apv:
            assert zf_min_sinr(gp, users, P_MW, NOISE_MW, LAM) < \
                zf_min_sinr(g, users, P_MW, NOISE_MW, LAM)
        else:
            assert min_snr(gp, init_phases(gp, users, LAM), users, P_MW, NOISE_MW, LAM) < \
                min_snr(g, init_phases(g, users, LAM), users, P_MW, NOISE_MW, LAM)

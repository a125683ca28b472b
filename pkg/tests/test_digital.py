import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nfma.arrays import RegionSpec, init_uniform_grid, subarray_offsets, validate
from nfma.channel import ArrayGeometry, UserChannel, channel_matrix
from nfma.closedform import construct_digital_apv
from nfma.digital import (OptimizerConfig, grad_min_sinr_apv, min_sinr_upper_bound,
                          optimize_digital, optimize_digital_statistical, project_to_region,
                          sinr_per_user, write_trace_csv, zf_min_sinr, zf_precoder)
from nfma.exceptions import DimensionMismatch, IllConditionedChannel, ZeroChannel

from conftest import LAM, NOISE_MW, P_MW, random_geometry, random_users


def fd_grad(f, x, h=1e-7):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_sinr_per_user_examples(rng):
    g = random_geometry(rng, 4)
    users = random_users(rng, 1)
    H = channel_matrix(g, users, LAM)
    W = rng.normal(size=(4, 1)) + 1j * rng.normal(size=(4, 1))
    s = sinr_per_user(g, W, users, NOISE_MW, LAM)
    assert s[0] == pytest.approx(abs(H[:, 0].conj() @ W[:, 0]) ** 2 / NOISE_MW)
    users = random_users(rng, 2)
    np.testing.assert_array_equal(sinr_per_user(g, np.zeros((4, 2)), users, NOISE_MW, LAM), 0)
    H = channel_matrix(g, users, LAM)
    W = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    s = sinr_per_user(g, W, users, NOISE_MW, LAM)
    for k in range(2):
        sig = abs(np.vdot(H[:, k], W[:, k])) ** 2
        intf = abs(np.vdot(H[:, k], W[:, 1 - k])) ** 2
        assert s[k] == pytest.approx(sig / (intf + NOISE_MW), rel=1e-12)
    with pytest.raises(DimensionMismatch):
        sinr_per_user(g, np.zeros((4, 3)), users, NOISE_MW, LAM)


def test_zf_precoder_examples(rng):
    h = rng.normal(size=(6, 1)) + 1j * rng.normal(size=(6, 1))
    W = zf_precoder(h, 2.0)
    np.testing.assert_allclose(W, np.sqrt(2.0) * h / np.linalg.norm(h), rtol=1e-12)
    # orthogonal equal-norm columns from a DFT matrix
    F = np.fft.fft(np.eye(8)) / np.sqrt(8) * 3.0
    H = F[:, :3]
    W = zf_precoder(H, 5.0)
    np.testing.assert_allclose(H.conj().T @ W, np.sqrt(5.0 / 3) * 3.0 * np.eye(3), atol=1e-12)
    H = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    W = zf_precoder(H, 1.0)
    G = H.conj().T @ W
    assert np.linalg.norm(G - np.diag(np.diag(G))) <= 1e-10 * np.linalg.norm(G)
    assert np.linalg.norm(W) ** 2 == pytest.approx(1.0, rel=1e-12)


def test_zf_ill_conditioned():
    h = np.arange(1, 5, dtype=complex)
    with pytest.raises(IllConditionedChannel):
        zf_precoder(np.column_stack([h, h]), 1.0)
    with pytest.raises(DimensionMismatch):
        zf_precoder(np.ones((2, 3)), 1.0)


def test_zf_min_sinr_examples():
    b = 1e-4 * np.exp(0.3j)
    g = random_geometry(np.random.default_rng(1), 9)
    u = UserChannel.single_path([1, -15, 20], b)
    assert zf_min_sinr(g, [u], P_MW, NOISE_MW, LAM) == pytest.approx(
        P_MW * 9 * abs(b) ** 2 / NOISE_MW, rel=1e-12)
    # two equal-gain users made orthogonal by an explicit placement
    users = [UserChannel.single_path([-3, -15, 20], b), UserChannel.single_path([4, -15, 25], b)]
    geom = construct_digital_apv(users, 2, RegionSpec(100 * LAM, LAM / 2), LAM)
    H = channel_matrix(geom, users, LAM)
    assert abs(np.vdot(H[:, 0], H[:, 1])) <= 1e-8 * np.linalg.norm(H[:, 0]) ** 2
    assert zf_min_sinr(geom, users, P_MW, NOISE_MW, LAM) == pytest.approx(
        P_MW * 2 * abs(b) ** 2 / (2 * NOISE_MW), rel=1e-8)


def test_zf_min_sinr_desk_value():
    s = np.array([0.0, -15.0, 25.0])
    b = LAM / (4 * np.pi * np.linalg.norm(s))
    assert np.linalg.norm(s) == pytest.approx(np.sqrt(850))
    assert b == pytest.approx(2.730e-5, rel=1e-3)
    geom = init_uniform_grid(64, RegionSpec(100 * LAM, LAM / 2))
    gamma = zf_min_sinr(geom, [UserChannel.single_path(s, b)], P_MW, NOISE_MW, LAM)
    assert gamma == pytest.approx(477, rel=2e-3)
    assert 10 * np.log10(gamma) == pytest.approx(26.8, abs=0.05)


def test_upper_bound_examples():
    users = [UserChannel.single_path([0, 0, 10], 1.0), UserChannel.single_path([1, 0, 10], 1j)]
    g, p = min_sinr_upper_bound(users, 8, 1, 1.0, 1.0)
    assert g == pytest.approx(4.0)
    np.testing.assert_allclose(p, [0.5, 0.5])
    users = [UserChannel.single_path([0, 0, 10], 1.0), UserChannel.single_path([1, 0, 10], 2.0)]
    g, p = min_sinr_upper_bound(users, 1, 1, 5.0, 1.0)
    np.testing.assert_allclose(p, [4.0, 1.0])
    assert 1 * 1 * p[0] == pytest.approx(4 * p[1]) == pytest.approx(g)
    with pytest.raises(ZeroChannel):
        min_sinr_upper_bound([UserChannel.single_path([0, 0, 1], 0.0)], 1, 1, 1.0, 1.0)


def test_bound_dominance_k32():
    rng = np.random.default_rng(5)
    for _ in range(100):
        users = random_users(rng, 32, n_nlos=int(rng.integers(0, 3)))
        g = random_geometry(rng, 64)
        bound = min_sinr_upper_bound(users, 64, 1, P_MW, NOISE_MW)[0]
        try:
            achieved = zf_min_sinr(g, users, P_MW, NOISE_MW, LAM)
        except IllConditionedChannel:
            continue
        assert achieved <= bound * (1 + 1e-9)


def test_gradient_zero_single_user():
    rng = np.random.default_rng(3)
    g = random_geometry(rng, 4)
    users = random_users(rng, 1)
    grad = grad_min_sinr_apv(g, users, P_MW, NOISE_MW, LAM)
    val = zf_min_sinr(g, users, P_MW, NOISE_MW, LAM)
    assert np.max(np.abs(grad)) <= 1e-6 * val / LAM


@pytest.mark.parametrize("M,N,K,L", [(4, 1, 2, 0), (4, 1, 2, 1), (2, 2, 2, 1), (4, 2, 3, 2)])
def test_gradient_finite_differences(M, N, K, L):
    rng = np.random.default_rng(100 * M + 10 * N + K + L)
    for _ in range(5):
        g = random_geometry(rng, M, N)
        users = random_users(rng, K, n_nlos=L)
        an = grad_min_sinr_apv(g, users, P_MW, NOISE_MW, LAM)
        fd = fd_grad(lambda v: zf_min_sinr(g.with_apv(v), users, P_MW, NOISE_MW, LAM), g.apv)
        assert np.linalg.norm(an - fd) <= 1e-4 * np.linalg.norm(fd)


def test_project_to_region():
    x = np.array([0.1, -0.2])
    np.testing.assert_array_equal(project_to_region(x, 0.5), x)
    np.testing.assert_array_equal(project_to_region([1.5, 0.0], 0.5), [0.5, 0.0])
    np.testing.assert_array_equal(project_to_region([1.5, -2.0, 0.2], 0.5), [0.5, -0.5, 0.2])


def test_optimizer_config_validation():
    for kw in (dict(max_iters=0), dict(shrink=1.0), dict(armijo=0.0), dict(init_step=-1.0),
               dict(max_backtracks=-1)):
        with pytest.raises(ValueError):
            OptimizerConfig(**kw)
    assert OptimizerConfig().step_for(0.01) == pytest.approx(0.1)


def test_optimize_single_user_stays_put():
    rng = np.random.default_rng(8)
    g = random_geometry(rng, 4)
    users = random_users(rng, 1)
    sol = optimize_digital(g, users, P_MW, NOISE_MW, LAM)
    assert sol.n_iter == 1 and sol.status == "converged"
    np.testing.assert_allclose(sol.geometry.centers, g.centers, atol=1e-12)


def test_optimize_two_users_reaches_bound():
    region = RegionSpec(100 * LAM, LAM / 2)
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        users = random_users(rng, 2)
        g = random_geometry(rng, 8, side=region.side_A)
        sol = optimize_digital(g, users, P_MW, NOISE_MW, LAM)
        bound = min_sinr_upper_bound(users, 8, 1, P_MW, NOISE_MW)[0]
        hits += 10 * np.log10(bound / sol.min_sinr) <= 0.5
        assert validate(sol.geometry) == []
        obj = [r.objective for r in sol.trace]
        assert all(b >= a for a, b in zip(obj, obj[1:]))
        assert np.linalg.norm(sol.precoder) ** 2 == pytest.approx(P_MW, rel=1e-10)
    assert hits >= 90


def test_optimize_rejects_infeasible_init(rng):
    g = ArrayGeometry([[0, 0], [0.001, 0]], region_half=0.25, d_min=LAM / 2)
    with pytest.raises(ValueError):
        optimize_digital(g, random_users(rng, 2), P_MW, NOISE_MW, LAM)


def test_statistical_reduces_to_instantaneous():
    rng = np.random.default_rng(21)
    g = random_geometry(rng, 6)
    users = random_users(rng, 3)
    cfg = OptimizerConfig(max_iters=15)
    inst = optimize_digital(g, users, P_MW, NOISE_MW, LAM, cfg)
    stat1 = optimize_digital_statistical(g, [users], P_MW, NOISE_MW, LAM, cfg)
    stat3 = optimize_digital_statistical(g, [users] * 3, P_MW, NOISE_MW, LAM, cfg)
    np.testing.assert_allclose(stat1.geometry.centers, inst.geometry.centers, rtol=0, atol=1e-12)
    np.testing.assert_allclose(stat3.geometry.centers, inst.geometry.centers, rtol=0, atol=1e-9)
    assert stat1.mean_min_sinr == pytest.approx(inst.min_sinr, rel=1e-9)
    with pytest.raises(ValueError):
        optimize_digital_statistical(g, [], P_MW, NOISE_MW, LAM)


def test_statistical_monotone_and_deterministic():
    rng = np.random.default_rng(4)
    g = random_geometry(rng, 8)
    reals = [random_users(rng, 3) for _ in range(5)]
    cfg = OptimizerConfig(max_iters=10)
    a = optimize_digital_statistical(g, reals, P_MW, NOISE_MW, LAM, cfg)
    b = optimize_digital_statistical(g, reals, P_MW, NOISE_MW, LAM, cfg)
    np.testing.assert_array_equal(a.geometry.centers, b.geometry.centers)
    obj = [r.objective for r in a.trace]
    assert all(y >= x for x, y in zip(obj, obj[1:]))
    assert len(a.precoders) == 5 and a.min_sinr.shape == (5,)


def test_trace_csv():
    rng = np.random.default_rng(2)
    sol = optimize_digital(random_geometry(rng, 4), random_users(rng, 2), P_MW, NOISE_MW, LAM,
                           OptimizerConfig(max_iters=3))
    buf = io.StringIO()
    write_trace_csv(sol.trace, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "iter,objective_linear,objective_db,step_size,backtracks"
    assert len(lines) == len(sol.trace) + 1
    first = lines[1].split(",")
    assert float(first[2]) == pytest.approx(10 * np.log10(float(first[1])))


@given(st.integers(0, 2**32 - 1), st.integers(8, 64), st.integers(2, 8))
def test_zf_invariants(seed, MN, K):
    rng = np.random.default_rng(seed)
    g = random_geometry(rng, MN)
    users = random_users(rng, K, n_nlos=int(rng.integers(0, 3)))
    H = channel_matrix(g, users, LAM)
    try:
        W = zf_precoder(H, P_MW)
    except IllConditionedChannel:
        return
    G = H.conj().T @ W
    c = np.mean(np.diag(G).real)
    assert np.linalg.norm(G - c * np.eye(K)) <= 1e-9 * np.linalg.norm(G)
    assert np.linalg.norm(W) ** 2 == pytest.approx(P_MW, rel=1e-10)
    s = sinr_per_user(g, W, users, NOISE_MW, LAM)
    assert s.max() - s.min() <= 1e-9 * s.min()
    assert zf_min_sinr(g, users, P_MW, NOISE_MW, LAM) == pytest.approx(s.min(), rel=1e-9)
    assert s.min() <= min_sinr_upper_bound(users, MN, 1, P_MW, NOISE_MW)[0] * (1 + 1e-9)

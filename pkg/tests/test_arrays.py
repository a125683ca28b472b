import numpy as np
import pytest
from hypothesis import given, strategies as st

from nfma.arrays import (BENCHMARK_KINDS, RegionSpec, benchmark_geometry, default_d_min,
                         format_geometry, init_subregion_grid, init_uniform_grid, load_geometry,
                         parse_geometry, save_geometry, subarray_offsets, validate)
from nfma.channel import ArrayGeometry, element_positions
from nfma.exceptions import BadShape, InfeasibleSpacing

LAM = 0.01


def _spacings(c):
    return np.unique(np.round(np.diff(np.unique(np.round(c, 12))), 12))


def test_uniform_grid_examples():
    g = init_uniform_grid(4, RegionSpec(2.0, 0.5))
    np.testing.assert_allclose(g.centers, [[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]])
    assert validate(g) == []
    g = init_uniform_grid(1, RegionSpec(2.0, 0.5))
    np.testing.assert_array_equal(g.centers, [[0, 0]])
    g = init_uniform_grid(64, RegionSpec(100 * LAM, LAM / 2))
    np.testing.assert_allclose(_spacings(g.centers[:, 0]), [0.125])
    np.testing.assert_allclose(_spacings(g.centers[:, 1]), [0.125])
    assert validate(g) == []


def test_grid_non_square_row_major():
    g = init_uniform_grid(5, RegionSpec(3.0))
    np.testing.assert_allclose(g.centers, [[-1, -1], [0, -1], [1, -1], [-1, 0], [0, 0]])


def test_subregion_grid_examples():
    g = init_subregion_grid(4, RegionSpec(4.0), 0.5)
    np.testing.assert_allclose(np.abs(g.centers), 0.5)
    r = RegionSpec(100 * LAM, LAM / 2)
    np.testing.assert_array_equal(init_subregion_grid(9, r, 1.0).centers,
                                  init_uniform_grid(9, r).centers)
    g = init_subregion_grid(16, r, 0.5)
    np.testing.assert_allclose(_spacings(g.centers[:, 0]), [50 * LAM / 4])
    assert g.region_half == pytest.approx(0.5)


def test_infeasible_spacing():
    with pytest.raises(InfeasibleSpacing):
        init_uniform_grid(16, RegionSpec(1.0, 0.3))
    with pytest.raises(InfeasibleSpacing):
        init_subregion_grid(16, RegionSpec(1.0, 0.2), 0.5)


def test_subarray_offsets_and_d_min():
    q = subarray_offsets(2, 2, LAM)
    np.testing.assert_allclose(q, [[-0.0025, -0.0025], [0.0025, -0.0025],
                                   [-0.0025, 0.0025], [0.0025, 0.0025]])
    assert default_d_min(LAM, 4, 2) == pytest.approx(0.02)
    with pytest.raises(BadShape):
        subarray_offsets(0, 1, LAM)


def test_benchmark_examples():
    g = benchmark_geometry("dense_upa", 64, RegionSpec(100 * LAM), LAM)
    assert g.M == 64 and g.N == 1
    np.testing.assert_allclose(_spacings(g.centers[:, 0]), [0.005])
    np.testing.assert_allclose(_spacings(g.centers[:, 1]), [0.005])
    g = benchmark_geometry("sparse_upa", 64, RegionSpec(1.0), LAM)
    np.testing.assert_allclose(_spacings(g.centers[:, 0]), [0.125])
    g = benchmark_geometry("h_sparse_ula", 64, RegionSpec(1.0), LAM)
    np.testing.assert_allclose(g.centers[:, 1], 0)
    np.testing.assert_allclose(np.diff(g.centers[:, 0]), 1 / 64)
    g = benchmark_geometry("v_sparse_upa", 16, RegionSpec(1.0), LAM)
    np.testing.assert_allclose(_spacings(g.centers[:, 0]), [0.005])
    np.testing.assert_allclose(_spacings(g.centers[:, 1]), [0.25])
    g = benchmark_geometry("h_sparse_upa", 16, RegionSpec(1.0), LAM)
    np.testing.assert_allclose(_spacings(g.centers[:, 0]), [0.25])
    np.testing.assert_allclose(_spacings(g.centers[:, 1]), [0.005])
    g = benchmark_geometry("v_sparse_ula", 8, RegionSpec(1.0), LAM)
    np.testing.assert_allclose(g.centers[:, 0], 0)


@pytest.mark.parametrize("kind", BENCHMARK_KINDS)
def test_benchmarks_inside_region_and_deterministic(kind):
    r = RegionSpec(50 * LAM, LAM / 2)
    g1 = benchmark_geometry(kind, 16, r, LAM)
    g2 = benchmark_geometry(kind, 16, r, LAM)
    np.testing.assert_array_equal(g1.centers, g2.centers)
    assert np.all(np.abs(g1.centers) <= r.half)
    assert g1.M == 16
    np.testing.assert_allclose(g1.centers.mean(axis=0), 0, atol=1e-15)


def test_benchmark_bad_shape():
    with pytest.raises(BadShape):
        benchmark_geometry("dense_upa", 12, RegionSpec(1.0), LAM)
    with pytest.raises(BadShape):
        benchmark_geometry("circle", 16, RegionSpec(1.0), LAM)


def test_validate_violations():
    g = ArrayGeometry([[0, 0], [0.5 - 1e-6, 0]], region_half=1.0, d_min=0.5)
    v = validate(g)
    assert len(v) == 1 and v[0].kind == "spacing" and v[0].indices == (0, 1)
    assert v[0].magnitude == pytest.approx(1e-6)
    g = ArrayGeometry([[1.0 + 1e-6, 0]], region_half=1.0)
    v = validate(g)
    assert len(v) == 1 and v[0].kind == "region"
    assert v[0].magnitude == pytest.approx(1e-6)
    assert validate(ArrayGeometry([[0.6, 0]]), RegionSpec(1.0)) != []


def test_geometry_text_round_trip(tmp_path):
    g = ArrayGeometry(np.array([[0.1234567890123, -0.2], [0.3, 0.4]]),
                      subarray_offsets(2, 1, LAM), 0.5, 0.01)
    text = format_geometry(g)
    lines = text.splitlines()
    assert lines[4] == "m n x y" and lines[5].startswith("1 1 ")
    assert len([ln for ln in lines if not ln.startswith("#")]) == 1 + 4
    g2 = parse_geometry(text)
    np.testing.assert_allclose(element_positions(g2), element_positions(g), rtol=0, atol=1e-15)
    assert g2.region_half == 0.5 and g2.d_min == 0.01
    save_geometry(g, tmp_path / "g.txt")
    g3 = load_geometry(tmp_path / "g.txt")
    np.testing.assert_allclose(g3.centers, g.centers, rtol=0, atol=1e-15)
    # the bare table is enough to recover positions
    bare = "\n".join(ln for ln in lines if not ln.startswith("#"))
    np.testing.assert_allclose(element_positions(parse_geometry(bare)), element_positions(g),
                               atol=1e-15)


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_geometry("m n x y\n")
    with pytest.raises(ValueError):
        parse_geometry("1 1 0.0\n")
    with pytest.raises(BadShape):
        parse_geometry("1 1 0 0\n1 2 0 1\n2 1 1 0\n")


@given(st.integers(1, 30), st.floats(0.1, 1.0))
def test_constructors_always_valid(M, scale):
    r = RegionSpec(100 * LAM, LAM / 2)
    try:
        g = init_subregion_grid(M, r, scale)
    except InfeasibleSpacing:
        return
    assert validate(g) == []
    assert g.M == M

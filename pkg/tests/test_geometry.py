import numpy as np
import pytest

from zklab import (build_grid, build_strip_grid, enforce_dirichlet,
                   sample_field, stationary_mode, zero_field)
from zklab.geometry import Field, RECTANGLE, TRUNCATED_STRIP


def test_spacings_match_definition():
    g = build_grid(2 * np.pi, np.pi, 63, 63)
    assert g.hx == 2 * np.pi / 64
    assert g.hy == 2 * np.pi / 64


def test_nx_below_minimum_rejected():
    with pytest.raises(ValueError, match="nx"):
        build_grid(1.0, 1.0, 7, 8)


@pytest.mark.parametrize("L,B", [(0.0, 1.0), (-1.0, 1.0), (1.0, np.inf), (1.0, np.nan)])
def test_bad_dimensions_rejected(L, B):
    with pytest.raises(ValueError):
        build_grid(L, B, 16, 16)


def test_counterexample_rectangle_grid():
    g = build_grid(4 * np.pi / np.sqrt(3), np.pi, 127, 127)
    assert g.nx == 127 and g.domain_kind == RECTANGLE
    assert np.isclose(g.hx * 128, 4 * np.pi / np.sqrt(3), rtol=0, atol=1e-15)


def test_node_coordinates_no_drift():
    g = build_grid(3.7, 1.3, 200, 50)
    xs = g.xs()
    for i in (0, 1, 37, 123, 201):
        assert xs[i] == i * g.hx
    ys = g.ys()
    for j in (0, 5, 51):
        assert ys[j] == -g.B + j * g.hy


def test_strip_grid_widening():
    g = build_strip_grid(2.0, y_support_radius=2.0, nx=32, ny=64)
    assert g.domain_kind == TRUNCATED_STRIP
    assert g.B == 8.0
    with pytest.raises(ValueError):
        build_strip_grid(2.0, -1.0, 32, 64)


def test_sample_zero_field():
    g = build_grid(1.0, 1.0, 8, 8)
    f = sample_field(g, lambda x, y: np.zeros_like(x))
    assert f.dirichlet_clean
    assert not f.values.any()


def test_sample_counterexample_mode_boundary():
    g = build_grid(4 * np.pi / np.sqrt(3), np.pi, 63, 63)
    f = sample_field(g, stationary_mode(1, 1, 1, np.pi))
    # the closed form vanishes on the walls up to rounding
    assert f.boundary_max() < 1e-14


def test_sample_constant_not_clean():
    g = build_grid(1.0, 1.0, 8, 8)
    f = sample_field(g, lambda x, y: np.ones_like(x))
    assert not f.dirichlet_clean
    assert f.values[0, 0] == 1.0


def test_sample_rejects_non_finite():
    g = build_grid(1.0, 1.0, 8, 8)
    with pytest.raises(ValueError):
        sample_field(g, lambda x, y: np.where(x > 0.5, np.inf, 0.0))


def test_enforce_dirichlet_zeroes_boundary():
    g = build_grid(1.0, 1.0, 8, 8)
    f = enforce_dirichlet(sample_field(g, lambda x, y: np.ones_like(x)))
    assert f.dirichlet_clean
    assert f.boundary_max() == 0.0
    assert np.all(f.interior == 1.0)


def test_enforce_dirichlet_idempotent_bitwise():
    g = build_grid(2.0, 1.0, 16, 12)
    rng = np.random.default_rng(3)
    f = Field(g, rng.normal(size=g.shape))
    once = enforce_dirichlet(f)
    twice = enforce_dirichlet(once)
    assert np.array_equal(once.values, twice.values)


def test_enforce_on_sampled_mode_changes_only_rounding():
    g = build_grid(4 * np.pi / np.sqrt(3), np.pi, 63, 63)
    f = sample_field(g, stationary_mode(1, 1, 1, np.pi))
    clean = enforce_dirichlet(f)
    assert np.max(np.abs(clean.values - f.values)) < 1e-14


def test_field_shape_and_immutability():
    g = build_grid(1.0, 1.0, 8, 8)
    with pytest.raises(ValueError):
        Field(g, np.zeros((5, 5)))
    f = zero_field(g)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0

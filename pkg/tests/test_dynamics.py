import math

import numpy as np
import pytest

from zklab import (SimConfig, Stepper, assemble_linear_part, build_grid,
                   enforce_dirichlet, initial_field, integrate, read_snapshot,
                   sample_field, simulate, simulate_regularized_sweep,
                   stationary_mode, step, write_snapshot, zero_field)
from zklab.dynamics import config_from_dict, transverse_eigenvalues
from zklab.geometry import TRUNCATED_STRIP
from zklab.harness import random_clean_field

CRIT_L = 4 * math.pi / math.sqrt(3)


def small_config(**over):
    base = dict(L=2.0, B=1.0, nx=31, ny=31, dt=1e-3, t_end=0.05,
                alpha=1, linear=False, initial="cos-product:0.4")
    base.update(over)
    return SimConfig(**base)


# ---------------------------------------------------------------------------
# configuration

def test_config_defaults_and_required():
    c = config_from_dict({"L": 2.0, "B": 1.0, "nx": 16, "ny": 16, "t_end": 0.1})
    assert c.alpha == 1 and c.epsilon == 0.0 and not c.linear
    assert c.dt == 1e-3 and c.linear_solver_tol == 1e-10
    assert c.trace_stride == 10 and c.initial == "zero"
    with pytest.raises(ValueError, match="missing"):
        config_from_dict({"L": 2.0})


def test_config_rejects_bad_values():
    with pytest.raises(ValueError, match="alpha"):
        small_config(alpha=2)
    with pytest.raises(ValueError, match="L"):
        small_config(L=-1.0)
    with pytest.raises(ValueError, match="epsilon"):
        small_config(epsilon=-1e-3)
    with pytest.raises(ValueError, match="trace_stride"):
        small_config(trace_stride=0)
    with pytest.raises(ValueError, match="unknown"):
        config_from_dict({"L": 2.0, "B": 1.0, "nx": 16, "ny": 16,
                          "dt": 1e-3, "t_end": 0.1, "gamma": 3})


def test_initial_tags():
    cfg = small_config(initial="zero")
    assert not initial_field(cfg).values.any()
    cfg = small_config(initial="cos-product:0.5")
    fld = initial_field(cfg)
    assert fld.dirichlet_clean and fld.values.max() > 0.4
    cfg = small_config(L=CRIT_L, B=math.pi, initial="mode:1,1,1")
    fld = initial_field(cfg)
    assert abs(fld.values.max() - 1.0) < 1e-6
    with pytest.raises(ValueError, match="critical length"):
        initial_field(small_config(L=2.0, B=math.pi, initial="mode:1,1,1"))
    with pytest.raises(ValueError, match="unknown tag"):
        initial_field(small_config(initial="wavelet:1"))


def test_initial_scale_weighted():
    from zklab import weighted_energy
    cfg = small_config(initial="cos-product:1.0", scale_weighted=0.25)
    assert abs(weighted_energy(initial_field(cfg)) - 0.25) < 1e-12


def test_initial_bump_support():
    cfg = small_config(B=8.0, ny=63, domain_kind=TRUNCATED_STRIP,
                       initial="cos-bump:1.0,2.0")
    fld = initial_field(cfg)
    g = fld.grid
    mask_out = np.abs(g.ys()) >= 2.0
    assert not fld.values[:, mask_out].any()
    with pytest.raises(ValueError, match="4x"):
        initial_field(small_config(B=4.0, ny=63, domain_kind=TRUNCATED_STRIP,
                                   initial="cos-bump:1.0,2.0"))


# ---------------------------------------------------------------------------
# assembled linear operator

def test_operator_residual_on_mode_refines():
    mode = stationary_mode(1, 1, 1, math.pi)
    errs = {}
    for nx in (63, 127):
        g = build_grid(CRIT_L, math.pi, nx, nx)
        lp = assemble_linear_part(g, alpha=1, epsilon=0.0)
        f = enforce_dirichlet(sample_field(g, mode))
        errs[nx] = np.max(np.abs(lp.apply(f).values))
    assert 3.0 < errs[63] / errs[127] < 5.0


def test_alpha_difference_is_dx():
    g = build_grid(2.0, 1.0, 16, 12)
    lp1 = assemble_linear_part(g, alpha=1)
    lp0 = assemble_linear_part(g, alpha=0)
    diff = lp1.blocks() - lp0.blocks()
    expected = np.broadcast_to(lp1.d1, diff.shape)
    assert np.max(np.abs(diff - expected)) < 1e-12


def test_regularization_quadratic_form_nonnegative():
    g = build_grid(2.0, 1.0, 24, 24)
    eps = 1e-2
    lp_eps = assemble_linear_part(g, alpha=1, epsilon=eps)
    lp0 = assemble_linear_part(g, alpha=1, epsilon=0.0)
    rng = np.random.default_rng(8)
    for _ in range(20):
        u = random_clean_field(g, rng)
        reg = lp_eps.apply(u).values - lp0.apply(u).values
        form = integrate(reg * u.values, g)
        norm_sq = integrate(u.values ** 2, g)
        assert form >= -1e-10 * norm_sq


def test_transverse_eigenvalues_match_dst_modes():
    ny, hy = 17, 0.1
    xis = transverse_eigenvalues(ny, hy)
    j = np.arange(1, ny + 1)
    for m in (1, 5, 17):
        v = np.sin(math.pi * m * j / (ny + 1))
        lap = np.zeros(ny)
        lap[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2])
        lap[0] = v[1] - 2 * v[0]
        lap[-1] = v[-2] - 2 * v[-1]
        lap /= hy ** 2
        assert np.max(np.abs(-lap - xis[m - 1] * v)) < 1e-9


# ---------------------------------------------------------------------------
# stepping

def test_step_zero_state_stays_zero():
    cfg = small_config()
    out = step(zero_field(cfg.grid()), cfg)
    assert not out.values.any()


def test_step_requires_clean_state():
    cfg = small_config()
    dirty = sample_field(cfg.grid(), lambda x, y: np.ones_like(x))
    with pytest.raises(ValueError, match="clean"):
        step(dirty, cfg)


def test_single_step_consistency_on_stationary_mode():
    cfg = SimConfig(L=CRIT_L, B=math.pi, nx=63, ny=63, dt=1e-3, t_end=1e-3,
                    alpha=1, linear=True, initial="mode:1,1,1")
    u0 = initial_field(cfg)
    u1 = step(u0, cfg)
    g = cfg.grid()
    num = math.sqrt(integrate((u1.values - u0.values) ** 2, g))
    den = math.sqrt(integrate(u0.values ** 2, g))
    assert num / den <= g.hx ** 2 + cfg.dt ** 2


def test_dt_halving_second_order():
    finals = {}
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = SimConfig(L=2 * math.pi, B=math.pi, nx=63, ny=63, dt=dt,
                        t_end=1.0, alpha=1, linear=False,
                        initial="cos-product:0.4", trace_stride=10 ** 9)
        finals[dt] = simulate(cfg).final.values
    e1 = np.max(np.abs(finals[4e-3] - finals[2e-3]))
    e2 = np.max(np.abs(finals[2e-3] - finals[1e-3]))
    assert 3.0 < e1 / e2 < 5.0


def test_space_self_convergence_second_order():
    finals = {}
    for n in (31, 63, 127):
        cfg = SimConfig(L=2 * math.pi, B=math.pi, nx=n, ny=n, dt=5e-4,
                        t_end=0.5, alpha=1, linear=False,
                        initial="cos-product:0.4", trace_stride=10 ** 9)
        finals[n] = simulate(cfg).final.interior
    # grids are nested: coarse interior node j maps to fine node 2j+1 (0-based)
    def restrict(fine):
        return fine[1::2, 1::2]

    e_c = np.max(np.abs(restrict(finals[63]) - finals[31]))
    e_f = np.max(np.abs(restrict(finals[127]) - finals[63]))
    assert 3.0 < e_c / e_f < 5.0


# ---------------------------------------------------------------------------
# trajectories

def test_simulate_deterministic_bitwise():
    cfg = small_config(t_end=0.02)
    a = simulate(cfg)
    b = simulate(cfg)
    assert np.array_equal(a.final.values, b.final.values)
    assert np.array_equal(a.trace.weighted, b.trace.weighted)


def test_linear_l2_monotone():
    cfg = small_config(linear=True, t_end=0.5, nx=63, ny=63,
                       initial="cos-product:0.5", trace_stride=5)
    tr = simulate(cfg).trace
    assert np.all(np.diff(tr.l2_sq) <= 1e-12 * tr.l2_sq[0])


def test_trace_fields_finite_and_times_increase():
    cfg = small_config(t_end=0.05, trace_stride=7)
    tr = simulate(cfg).trace
    assert np.all(np.diff(tr.t) > 0)
    for name in ("l2_sq", "weighted", "flux0", "grad_x_sq", "grad_y_sq", "cubic"):
        assert np.all(np.isfinite(tr.column(name)))
    assert tr.i0_initial is not None and tr.i0_initial > 0
    assert np.all(tr.weighted >= tr.l2_sq * (1 - 1e-12))


def test_continuous_dependence():
    base = SimConfig(L=2.0, B=1.0, nx=63, ny=63, dt=2e-3, t_end=5.0,
                     alpha=1, linear=False, initial="cos-product:1.0",
                     scale_weighted=0.5 * 441 / 256, trace_stride=10 ** 9)
    ua = simulate(base).final
    g = ua.grid
    u0 = initial_field(base, g)
    bump = sample_field(g, lambda x, y: np.sin(np.pi * x / g.L)
                        * np.sin(np.pi * (y + g.B) / (2 * g.B)))
    delta0 = 1e-6 / math.sqrt(integrate(bump.values ** 2, g))
    from zklab.geometry import Field
    perturbed = Field(g, u0.values + delta0 * bump.values, dirichlet_clean=True)
    stepper = Stepper(base, g)
    interior = perturbed.interior.copy()
    for _ in range(base.n_steps):
        interior = stepper.advance(interior)
    ub = ua.with_interior(interior)
    dnorm = math.sqrt(integrate((ub.values - ua.values) ** 2, g))
    K = dnorm / 1e-6
    assert np.isfinite(K)
    assert K < 100.0


def test_blowup_aborts_with_partial_trace():
    cfg = small_config(initial="cos-product:100000.0", t_end=0.5, dt=1e-2,
                       trace_stride=1)
    traj = simulate(cfg)
    assert traj.aborted_at is not None
    assert traj.aborted_at <= 0.5
    assert len(traj.trace) >= 1
    assert np.all(np.isfinite(traj.trace.l2_sq))


def test_sweep_zero_datum_all_distances_zero():
    cfg = small_config(initial="zero", t_end=0.01)
    res = simulate_regularized_sweep(cfg, [1e-2, 5e-3, 0.0])
    assert res.pairwise_distances == [0.0, 0.0]
    assert res.distances_to_limit == [0.0, 0.0]


def test_sweep_validates_epsilons():
    cfg = small_config(t_end=0.01)
    with pytest.raises(ValueError):
        simulate_regularized_sweep(cfg, [1e-3, 1e-3])
    with pytest.raises(ValueError):
        simulate_regularized_sweep(cfg, [1e-3])


def test_snapshot_round_trip(tmp_path):
    g = build_grid(2.0, 1.0, 16, 12)
    rng = np.random.default_rng(9)
    fld = enforce_dirichlet(sample_field(g, lambda x, y: np.sin(x + y)))
    path = tmp_path / "state.zks"
    write_snapshot(path, 1.25, fld)
    t, back = read_snapshot(path)
    assert t == 1.25
    assert back.grid.L == g.L and back.grid.nx == g.nx
    assert np.array_equal(back.values, fld.values)


def test_initial_from_snapshot(tmp_path):
    cfg = small_config(nx=16, ny=12, t_end=0.01)
    fld = initial_field(cfg)
    path = tmp_path / "u0.zks"
    write_snapshot(path, 0.0, fld)
    cfg2 = small_config(nx=16, ny=12, t_end=0.01,
                        initial={"file": str(path)})
    fld2 = initial_field(cfg2)
    assert np.array_equal(fld.values, fld2.values)

import numpy as np
import pytest

from rtmixed.assembly import NonlinearitySpec, assemble_saddle
from rtmixed.errors import DivergenceError
from rtmixed.projection import initial_data
from rtmixed.quadrature import integrate_on_cell, simplex_rule
from rtmixed.solver import factor
from rtmixed.spaces import DiscreteField, evaluate_field
from rtmixed.problems import allen_cahn_2d
from rtmixed.timestepper import (
    RunConfig,
    TimeStepState,
    build_spaces,
    manufactured_source,
    run,
    step,
)


def zero_state(rt, dg):
    return TimeStepState(
        n=0,
        t=0.0,
        u_h=DiscreteField(dg, np.zeros(dg.n_dofs)),
        sigma_h=DiscreteField(rt, np.zeros(rt.n_dofs)),
    )


def test_config_validates_time_grid():
    with pytest.raises(ValueError):
        RunConfig(dim=2, M=4, r=0, tau=0.3, T=1.0)
    with pytest.raises(ValueError):
        RunConfig(dim=2, M=4, r=0, tau=-0.1, T=1.0)
    cfg = RunConfig(dim=2, M=4, r=0, tau=0.25, T=1.0)
    assert cfg.n_steps == 4


def test_zero_data_is_fixed_point():
    cfg = RunConfig(dim=2, M=2, r=0, tau=0.5, T=1.0)
    mesh, rt, dg = build_spaces(cfg)
    system = assemble_saddle(rt, dg, cfg.tau)
    fact = factor(system)
    state = zero_state(rt, dg)
    for _ in range(2):
        state = step(system, fact, state, cfg)
        assert np.allclose(state.u_h.coeffs, 0.0)
        assert np.allclose(state.sigma_h.coeffs, 0.0)
    assert state.t == pytest.approx(1.0)


def test_single_step_matches_dense_oracle():
    # M=1 square, r=0: 5 flux dofs + 2 cell dofs, assembled entry by entry
    # through scalar quadrature and solved densely
    exact, fspec, _ = allen_cahn_2d()
    cfg = RunConfig(dim=2, M=1, r=0, tau=0.5, T=1.0, nonlinearity=fspec, exact=exact)
    mesh, rt, dg = build_spaces(cfg)
    system = assemble_saddle(rt, dg, cfg.tau)
    fact = factor(system)

    rng = np.random.default_rng(8)
    u_prev = DiscreteField(dg, rng.uniform(-0.5, 0.5, dg.n_dofs))
    s_prev = DiscreteField(rt, rng.uniform(-0.5, 0.5, rt.n_dofs))
    state = step(system, fact, TimeStepState(0, 0.0, u_prev, s_prev), cfg)

    rule = simplex_rule(2, 8)
    n_rt, n_dg = rt.n_dofs, dg.n_dofs
    basis_rt = []
    for j in range(n_rt):
        e = np.zeros(n_rt)
        e[j] = 1.0
        basis_rt.append(DiscreteField(rt, e))
    M_d = np.zeros((n_rt, n_rt))
    for c in range(mesh.n_cells):
        for i in range(n_rt):
            for j in range(n_rt):
                f = lambda xh, i=i, j=j, c=c: (
                    evaluate_field(basis_rt[i], c, xh) * evaluate_field(basis_rt[j], c, xh)
                ).sum(axis=1)
                M_d[i, j] += mesh.det_B[c] * float(rule.weights @ f(rule.points))
    # RT0 divergence theorem: int_K div phi_f psi_c = orientation sign of f in c
    B_d = np.zeros((n_rt, n_dg))
    for c in range(mesh.n_cells):
        for i, f in enumerate(mesh.cell_faces[c]):
            B_d[f, c] = mesh.cell_face_signs[c, i]
    D_d = np.diag(mesh.cell_measures)

    g = manufactured_source(exact, fspec)
    t1 = cfg.tau
    # same source quadrature degree as the scheme (2r+10), recomputed through
    # the scalar integration path
    G = np.array(
        [integrate_on_cell(mesh, c, lambda x: g(x, t1), simplex_rule(2, 10)) for c in range(n_dg)]
    )
    uprev_cell = u_prev.coeffs.copy()
    F = np.array(
        [
            integrate_on_cell(
                mesh, c, lambda x, c=c: np.full(len(x), uprev_cell[c] ** 3), simplex_rule(2, 2)
            )
            for c in range(n_dg)
        ]
    )
    rhs = np.concatenate(
        [np.zeros(n_rt), D_d @ u_prev.coeffs / cfg.tau - F + G]
    )
    A = np.block([[M_d, B_d], [-B_d.T, D_d / cfg.tau]])
    dense = np.linalg.solve(A, rhs)
    assert np.abs(dense[:n_rt] - state.sigma_h.coeffs).max() < 1e-10
    assert np.abs(dense[n_rt:] - state.u_h.coeffs).max() < 1e-10


def test_steps_are_deterministic():
    exact, fspec, _ = allen_cahn_2d()
    cfg = RunConfig(dim=2, M=2, r=0, tau=0.25, T=1.0, nonlinearity=fspec, exact=exact)
    _, rt, dg = build_spaces(cfg)
    system = assemble_saddle(rt, dg, cfg.tau)
    fact = factor(system)
    s0, u0 = initial_data(rt, dg, exact)
    state = TimeStepState(0, 0.0, u0, s0)
    a = step(system, fact, step(system, fact, state, cfg), cfg)
    b = step(system, fact, step(system, fact, state, cfg), cfg)
    assert np.array_equal(a.u_h.coeffs, b.u_h.coeffs)
    assert np.array_equal(a.sigma_h.coeffs, b.sigma_h.coeffs)


def test_linearity_without_nonlinear_terms():
    # with the nonlinearity off the map u_prev -> u_next is affine
    cfg = RunConfig(dim=2, M=3, r=1, tau=0.5, T=1.0,
                    source=lambda x, t: np.sin(x[..., 0] + t))
    _, rt, dg = build_spaces(cfg)
    system = assemble_saddle(rt, dg, cfg.tau)
    fact = factor(system)
    rng = np.random.default_rng(1)

    def advance(u_coeffs):
        st = TimeStepState(
            0, 0.0, DiscreteField(dg, u_coeffs), DiscreteField(rt, np.zeros(rt.n_dofs))
        )
        out = step(system, fact, st, cfg)
        return out.u_h.coeffs, out.sigma_h.coeffs

    a = rng.standard_normal(dg.n_dofs)
    b = rng.standard_normal(dg.n_dofs)
    ua, sa = advance(a)
    ub, sb = advance(b)
    uab, sab = advance(a + b)
    u0, s0 = advance(np.zeros(dg.n_dofs))
    assert np.abs(uab - ua - ub + u0).max() < 1e-11
    assert np.abs(sab - sa - sb + s0).max() < 1e-11


def test_divergence_error_reports_step():
    cfg = RunConfig(dim=2, M=2, r=0, tau=0.5, T=1.0, nonlinearity=NonlinearitySpec(cubic=True))
    _, rt, dg = build_spaces(cfg)
    system = assemble_saddle(rt, dg, cfg.tau)
    fact = factor(system)
    bad = TimeStepState(
        3,
        1.5,
        DiscreteField(dg, np.full(dg.n_dofs, np.nan)),
        DiscreteField(rt, np.zeros(rt.n_dofs)),
    )
    with pytest.raises(DivergenceError) as err:
        step(system, fact, bad, cfg)
    assert err.value.step_index == 4


def test_run_example_sanity(scheme_runs):
    state, rec = scheme_runs("allen_cahn_2d", 8, 0, 1 / 8)
    assert state.t == pytest.approx(1.0)
    assert state.n == 8
    assert rec.err_u_L2 < 0.02
    assert rec.err_sigma_L2 < 0.08
    assert rec.eq1_residual < 1e-9
    assert rec.chain_dg_sq <= rec.chain_inner + 1e-9


def test_run_history_tracking():
    exact, fspec, _ = allen_cahn_2d()
    cfg = RunConfig(dim=2, M=2, r=0, tau=0.25, T=0.5, nonlinearity=fspec, exact=exact,
                    track_history=True, track_flux_error=True)
    _, rec = run(cfg)
    assert len(rec.history) == 2
    assert rec.history[-1][1] == pytest.approx(0.5)
    assert rec.err_sigma_accum > 0

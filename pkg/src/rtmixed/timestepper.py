"""Linearized backward-Euler time stepping of the mixed scheme.

Each step solves one constant-coefficient saddle system

    (sigma^n, chi) + (u^n, div chi) = 0
    (1/tau)(u^n, v) - (div sigma^n, v) = (1/tau)(u^{n-1}, v)
                                         - (f(u^{n-1}, sigma^{n-1}), v) + (g(t_n), v)

with the nonlinearity lagged by one step, so a single factorization serves
the whole run.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .assembly import NonlinearitySpec, assemble_nonlinear_load, assemble_saddle, assemble_source
from .errors import DivergenceError
from .mesh import build_unit_cube_mesh, build_unit_square_mesh
from .projection import initial_data
from .solver import factor
from .spaces import DiscreteField, build_dg_space, build_rt_space

TIME_GRID_TOL = 1e-12


@dataclass
class RunConfig:
    """Full description of one scheme run."""

    dim: int
    M: int
    r: int
    tau: float
    T: float
    nonlinearity: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    source: callable = None
    exact: object = None
    label: str = "run"
    p_list: tuple = (2, 3, 4, 6)
    track_history: bool = False
    track_flux_error: bool = False
    vtk_stride: int = None
    vtk_dir: str = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        n = round(self.T / self.tau)
        if n < 1 or abs(n * self.tau - self.T) > TIME_GRID_TOL * self.T:
            raise ValueError(
                f"T/tau = {self.T / self.tau} is not a positive integer: "
                "the time grid must be uniform with t_N = T exactly"
            )

    @property
    def n_steps(self):
        return round(self.T / self.tau)


@dataclass
class TimeStepState:
    """Scheme state after step n (t = n tau)."""

    n: int
    t: float
    u_h: DiscreteField
    sigma_h: DiscreteField


def manufactured_source(exact, fspec):
    """Source g = u_t - laplace(u) + f(u, grad u) built from exact callbacks."""

    def g(x, t):
        val = exact.u_t(x, t) - exact.laplace_u(x, t)
        if not fspec.is_zero:
            u = exact.u(x, t)
            grad = exact.grad_u(x, t) if fspec.advection else None
            val = val + fspec.evaluate(u, grad, x.shape[-1])
        return val

    return g


def resolve_source(config):
    """The effective source callback of a run (None means zero)."""
    if config.source is not None:
        return config.source
    if config.exact is not None:
        return manufactured_source(config.exact, config.nonlinearity)
    return None


def build_spaces(config):
    """Mesh and RT/DG pair for a run configuration."""
    mesh = (build_unit_square_mesh if config.dim == 2 else build_unit_cube_mesh)(config.M)
    return mesh, build_rt_space(mesh, config.r), build_dg_space(mesh, config.r)


def step(system, fact, state, config):
    """Advance one backward-Euler step; all nonlinear data lag one step."""
    rt, dg, tau = system.rt, system.dg, system.tau
    n = state.n + 1
    t = n * tau
    rhs_u = system.D @ state.u_h.coeffs / tau
    if not config.nonlinearity.is_zero:
        rhs_u -= assemble_nonlinear_load(dg, rt, state.u_h, state.sigma_h, config.nonlinearity)
    g = resolve_source(config)
    if g is not None:
        rhs_u += assemble_source(dg, g, t)
    if not np.isfinite(rhs_u).all():
        raise DivergenceError(n, f"non-finite right-hand side at time step {n}")
    sigma_c, u_c = fact.solve(np.zeros(system.n_rt), rhs_u)
    if not (np.isfinite(sigma_c).all() and np.isfinite(u_c).all()):
        raise DivergenceError(n)
    return TimeStepState(
        n=n, t=t, u_h=DiscreteField(dg, u_c, time_tag=t), sigma_h=DiscreteField(rt, sigma_c, time_tag=t)
    )


def first_equation_residual(system, state):
    """max_chi |(sigma_h, chi) + (u_h, div chi)| over the RT basis."""
    res = system.M @ state.sigma_h.coeffs + system.B @ state.u_h.coeffs
    return float(np.abs(res).max())


def run(config):
    """Execute N = T/tau steps from projected initial data.

    Returns (final TimeStepState, StudyRecord).
    """
    start = time.perf_counter()
    mesh, rt, dg = build_spaces(config)
    system = assemble_saddle(rt, dg, config.tau)
    fact = factor(system)

    if config.exact is not None:
        sigma0, u0 = initial_data(rt, dg, config.exact)
    else:
        sigma0 = DiscreteField(rt, np.zeros(rt.n_dofs), time_tag=0.0)
        u0 = DiscreteField(dg, np.zeros(dg.n_dofs), time_tag=0.0)
    state = TimeStepState(n=0, t=0.0, u_h=u0, sigma_h=sigma0)

    history = [] if config.track_history else None
    flux_accum = 0.0
    eq1_max = 0.0
    if config.vtk_stride:
        _write_snapshot(mesh, dg, state, config)
    for _ in range(config.n_steps):
        state = step(system, fact, state, config)
        eq1_max = max(eq1_max, first_equation_residual(system, state))
        if config.track_flux_error and config.exact is not None:
            flux_accum += config.tau * analysis.l2_error(state.sigma_h, config.exact.grad_u, state.t) ** 2
        if history is not None:
            err = (
                analysis.l2_error(state.u_h, config.exact.u, state.t)
                if config.exact is not None
                else None
            )
            history.append((state.n, state.t, err))
        if config.vtk_stride and state.n % config.vtk_stride == 0:
            _write_snapshot(mesh, dg, state, config)

    record = analysis.compute_record(
        label=config.label,
        M=config.M,
        r=config.r,
        tau=config.tau,
        u_h=state.u_h,
        sigma_h=state.sigma_h,
        exact=config.exact,
        t=state.t,
        wall_time=time.perf_counter() - start,
        eq1_residual=eq1_max,
        p_list=config.p_list,
        err_sigma_accum=np.sqrt(flux_accum) if config.track_flux_error else None,
    )
    if history is not None:
        record.history = history
    return state, record


def _write_snapshot(mesh, dg, state, config):
    from pathlib import Path

    from .quadrature import simplex_rule
    from .vtk import write_vtk

    rule = simplex_rule(mesh.dim, max(dg.r, 1))
    averages = (dg.cell_values(state.u_h.coeffs, rule) @ rule.weights) * mesh.det_B / mesh.cell_measures
    out_dir = Path(config.vtk_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{config.label}_M{config.M}_step{state.n:05d}.vtk"
    write_vtk(mesh, path, cell_data={"u_h": averages})

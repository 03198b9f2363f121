"""Coupled time stepping of (v, p, F, M) on the MAC grid.

One step solves, in the order M -> F -> (v, p),

    (M' - M) / dt - Lap M'          = -(v.grad) M - GL(M) + H
    (F' - F) / dt - kappa Lap F'     = -(v.grad) F + grad v F
    (v' - v) / dt - nu Lap v' + grad p = -(v.grad) v - grad^T M' Lap M' + div(F' F'^T)
    div v' = 0

with diffusion implicit and the remaining terms evaluated at the latest
iterate.  A single pass is the IMEX scheme; repeating the pass until the
iterates stop changing (``SimParams.coupling_iterations > 1``) converges to
the fully implicit backward-Euler step, whose discrete energy balance closes
exactly because every coupling term is the adjoint of its partner.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import fastsolve, ops
from .grid import (FieldState, GridSpec, SimParams, f_wall_value, fill_dirichlet, fill_neumann,
                   fill_velocity, interior_cells, pad_cells, pad_faces)


class SolverError(RuntimeError):
    """A step could not be completed (non-convergence, non-finite fields)."""


class CFLError(SolverError):
    """The requested time step violates the stability limit."""


@dataclass
class StepReport:
    time: float
    cfl: float
    poisson_iters: int
    residuals: dict = field(default_factory=dict)
    coupling_iters: int = 1


Source = Callable[[float], dict]


# --------------------------------------------------------------------------
# helpers

def _pad_v(u, grid: GridSpec) -> tuple[np.ndarray, ...]:
    v = tuple(pad_faces(uk, grid.dim, k) for k, uk in enumerate(u))
    fill_velocity(v, grid.dim)
    return v


def _unknowns(v, grid: GridSpec) -> tuple[np.ndarray, ...]:
    return tuple(vk[interior_cells(grid.dim)] for vk in v)


def _grad_cells(q: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, ...]:
    qp = pad_cells(q, grid.dim)
    fill_neumann(qp, grid.dim)
    return ops.gradient(qp, grid)


def _div_unknowns(u, grid: GridSpec) -> np.ndarray:
    return ops.divergence(tuple(pad_faces(uk, grid.dim, k) for k, uk in enumerate(u)), grid)


def max_speed(state: FieldState) -> float:
    return max(float(np.abs(vk).max()) for vk in state.v)


def cfl_number(state: FieldState, params: SimParams) -> float:
    return params.dt * max_speed(state) / min(state.grid.spacing)


def check_cfl(state: FieldState, params: SimParams) -> float:
    """Advective CFL number; raises :class:`CFLError` above the limit.

    With explicit diffusion (audit mode) the diffusive limit
    ``dt <= h^2 / (4 max(nu, kappa, 1))`` is enforced as well.
    """
    cfl = cfl_number(state, params)
    if cfl > params.cfl_limit:
        raise CFLError(f"CFL number {cfl:.3g} exceeds the limit {params.cfl_limit}")
    if params.audit_mode:
        h = min(state.grid.spacing)
        limit = 0.25 * h ** 2 / max(params.nu, params.kappa, 1.0)
        if params.dt > limit:
            raise CFLError(f"dt = {params.dt:.3g} exceeds the explicit diffusion limit {limit:.3g}")
    return cfl


def _source(source: Source | None, t: float, key: str):
    if source is None:
        return None
    return source(t).get(key)


# --------------------------------------------------------------------------
# sub-steps

def step_magnetization(state: FieldState, params: SimParams, iterate: FieldState | None = None,
                       source: Source | None = None) -> np.ndarray:
    """New padded magnetisation; transport and GL terms taken from ``iterate``."""
    it = state if iterate is None else iterate
    grid, dt, c = state.grid, params.dt, params.coupling
    rhs = ops.laplacian(state.M, grid)
    if c.advection:
        rhs = rhs - ops.advect(it.v, it.M, grid, params.advection_scheme)
    if c.ginzburg_landau:
        rhs = rhs - ops.ginzburg_landau(it.interior("M"), params.mu)
    if params.has_field:
        rhs = rhs + np.asarray(params.h_ext)
    s = _source(source, state.time + dt, "M")
    if s is not None:
        rhs = rhs + s
    if params.audit_mode:
        delta = dt * rhs
    else:
        delta = fastsolve.helmholtz_neumann(dt * rhs, grid.cells, grid.spacing, dt)
    M = state.M.copy()
    M[interior_cells(grid.dim)] += delta
    fill_neumann(M, grid.dim)
    return M


def step_deformation(state: FieldState, params: SimParams, iterate: FieldState | None = None,
                     source: Source | None = None) -> np.ndarray:
    """New padded deformation gradient; transport and stretching from ``iterate``."""
    it = state if iterate is None else iterate
    grid, dt, c = state.grid, params.dt, params.coupling
    rhs = params.kappa * ops.laplacian(state.F, grid)
    if c.advection:
        rhs = rhs - ops.advect(it.v, it.F, grid, params.advection_scheme)
    if c.stretching:
        rhs = rhs + ops.velocity_gradient_times_F(it.v, it.F, grid)
    s = _source(source, state.time + dt, "F")
    if s is not None:
        rhs = rhs + s
    if params.audit_mode or params.kappa == 0:
        delta = dt * rhs
    else:
        delta = fastsolve.helmholtz_dirichlet(dt * rhs, grid.cells, grid.spacing, dt * params.kappa)
    F = state.F.copy()
    F[interior_cells(grid.dim)] += delta
    fill_dirichlet(F, grid.dim, f_wall_value(grid.dim, params.f_boundary))
    return F


def coupling_force(F: np.ndarray, M: np.ndarray, grid: GridSpec, params: SimParams):
    """Body force of the stresses on the velocity unknowns, or ``None``."""
    c = params.coupling
    force = None
    if c.elastic_stress:
        force = ops.elastic_stress_div(F, grid)
    if c.magnetic_stress:
        fm = ops.magnetic_force(M, grid)
        force = tuple(-f for f in fm) if force is None else tuple(a - b for a, b in zip(force, fm))
    return force


def _stokes(grid: GridSpec, r, v_old, a: float, tol: float, maxiter: int = 500, q0=None):
    """Solve ``(I - a L) d + grad q = r``, ``div(v_old + d) = 0``.

    Conjugate gradients on the pressure Schur complement with the
    preconditioner ``(-L_p)^-1 + a I``; every inner solve is a fast
    transform.  ``q0`` warm-starts the iteration; the stopping test is
    relative to ``|b|`` so a good guess saves iterations.
    Returns ``(d, q, iterations, residual)``.
    """
    cells, h = grid.cells, grid.spacing
    H = lambda u: fastsolve.helmholtz_velocity(u, cells, h, a)
    d0 = H(r)
    b = -(_div_unknowns(d0, grid) + _div_unknowns(v_old, grid))
    b -= b.mean()
    n = b.size
    shape = b.shape

    def schur(x):
        q = x.reshape(shape)
        y = -_div_unknowns(H(_grad_cells(q, grid)), grid)
        return (y - y.mean()).ravel()

    def precond(x):
        q = x.reshape(shape)
        y = -fastsolve.poisson_neumann(q, cells, h) + a * (q - q.mean())
        return (y - y.mean()).ravel()

    iters = 0
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        q = np.zeros(shape)
    else:
        def count(_):
            nonlocal iters
            iters += 1
        S = LinearOperator((n, n), matvec=schur, dtype=float)
        P = LinearOperator((n, n), matvec=precond, dtype=float)
        x0 = None if q0 is None else (q0 - q0.mean()).ravel()
        x, info = cg(S, b.ravel(), x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=P, callback=count)
        if info != 0:
            raise SolverError(f"pressure solve did not converge (info={info})")
        q = x.reshape(shape)
    g = _grad_cells(q, grid)
    d = tuple(dk - hk for dk, hk in zip(d0, H(g)))
    res = float(np.linalg.norm(schur(q.ravel()) - b.ravel()) / bnorm) if bnorm else 0.0
    return d, q, iters, res


def _project(grid: GridSpec, u):
    """Remove the discrete gradient part of face unknowns ``u``."""
    div = _div_unknowns(u, grid)
    if not np.any(div):
        return u, np.zeros(grid.cells)
    phi = fastsolve.poisson_neumann(div - div.mean(), grid.cells, grid.spacing)
    g = _grad_cells(phi, grid)
    return tuple(uk - gk for uk, gk in zip(u, g)), phi


def step_momentum(state: FieldState, params: SimParams, F_new: np.ndarray, M_new: np.ndarray,
                  iterate: FieldState | None = None, source: Source | None = None):
    """New padded velocity and zero-mean pressure; returns ``(v, p, info)``."""
    it = state if iterate is None else iterate
    grid, dt = state.grid, params.dt
    a = dt * params.nu
    rhs = [params.nu * L for L in ops.laplacian(state.v, grid)]
    if params.coupling.advection:
        adv = ops.momentum_advection(it.v, grid, params.advection_scheme)
        rhs = [r - n for r, n in zip(rhs, adv)]
    force = coupling_force(F_new, M_new, grid, params)
    if force is not None:
        rhs = [r + f for r, f in zip(rhs, force)]
    s = _source(source, state.time + dt, "v")
    if s is not None:
        rhs = [r + sk for r, sk in zip(rhs, s)]
    r = tuple(dt * rk for rk in rhs)
    v_old = _unknowns(state.v, grid)
    if params.projection == "stokes":
        q0 = dt * it.p[interior_cells(grid.dim)]
        d, q, iters, res = _stokes(grid, r, v_old, a, params.tol * 1e-2, q0=q0)
    else:
        d = fastsolve.helmholtz_velocity(r, grid.cells, grid.spacing, a)
        q, iters, res = np.zeros(grid.cells), 0, 0.0
    u = tuple(vo + dk for vo, dk in zip(v_old, d))
    u, phi = _project(grid, u)
    q = q + phi
    p = pad_cells(q / dt, grid.dim)
    fill_neumann(p, grid.dim)
    div = float(np.abs(_div_unknowns(u, grid)).max())
    return _pad_v(u, grid), p, {"poisson_iters": iters, "stokes_residual": res, "divergence": div}


# --------------------------------------------------------------------------
# full steps

def _change(a: FieldState, b: FieldState) -> float:
    diffs = [np.abs(x - y).max() for x, y in zip(a.v, b.v)]
    diffs += [np.abs(a.F - b.F).max(), np.abs(a.M - b.M).max()]
    return float(max(diffs))


def _scale(s: FieldState) -> float:
    return 1.0 + max(max_speed(s), float(np.abs(s.F).max()), float(np.abs(s.M).max()))


def advance(state: FieldState, params: SimParams, source: Source | None = None):
    """One coupled step; returns ``(new_state, StepReport)``."""
    cfl = check_cfl(state, params)
    grid = state.grid
    it = state
    iters_total, k = 0, 0
    info = {}
    change = 0.0
    for k in range(1, params.coupling_iterations + 1):
        M = step_magnetization(state, params, it, source)
        F = step_deformation(state, params, it, source)
        v, p, info = step_momentum(state, params, F, M, it, source)
        new = FieldState(grid, v, p, F, M, state.time + params.dt)
        iters_total += info["poisson_iters"]
        change = _change(new, it) if k > 1 else np.inf
        it = new
        if params.coupling_iterations == 1 or change <= params.coupling_tol * _scale(new):
            break
        if k > 1 and not np.isfinite(change):
            break
    if params.coupling_iterations > 1 and not change <= params.coupling_tol * _scale(it):
        raise SolverError(f"coupling iteration did not converge (last change {change:.3g})")
    if not it.is_finite():
        raise SolverError("non-finite field values")
    if info["divergence"] > params.tol:
        raise SolverError(f"divergence {info['divergence']:.3g} exceeds tolerance {params.tol}")
    report = StepReport(
        time=it.time, cfl=cfl, poisson_iters=iters_total,
        residuals={"stokes": info["stokes_residual"], "divergence": info["divergence"],
                   "coupling": change if k > 1 else 0.0},
        coupling_iters=k,
    )
    return it, report


@dataclass
class Trajectory:
    initial: FieldState
    final: FieldState
    reports: list = field(default_factory=list)
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    ledger: object = None
    error: Exception | None = None

    @property
    def steps(self) -> int:
        return len(self.reports)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])


Hook = Callable[[float, FieldState, object], object]


def step_count(t_span: float, dt: float) -> int:
    """Number of steps of size ``dt`` covering ``t_span`` (the last may be shorter)."""
    if t_span <= 0:
        return 0
    n = t_span / dt
    return max(1, int(round(n))) if abs(n - round(n)) <= 1e-9 * max(1.0, n) else int(np.ceil(n))


def run(state0: FieldState, params: SimParams, hooks: Iterable[Hook] = (), cadence: int = 5,
        t_end: float | None = None, keep_states: bool = False, track_ledger: bool = True,
        source: Source | None = None) -> Trajectory:
    """Advance from ``state0`` to ``t_end`` (default ``params.t_end``).

    Hooks are called as ``hook(time, state, ledger)`` at step 0, every
    ``cadence`` steps and at the final step; their return values are
    collected in ``Trajectory.records``.  ``keep_states`` stores the states
    at the same sample times.
    """
    from .diagnostics import new_ledger, update_ledger

    if cadence < 1:
        raise ValueError("cadence must be a positive integer")
    t_end = params.t_end if t_end is None else t_end
    if t_end < state0.time:
        raise ValueError("t_end precedes the initial time")
    hooks = list(hooks)
    ledger = new_ledger(state0, params) if track_ledger else None
    traj = Trajectory(initial=state0, final=state0, ledger=ledger)

    def sample(state):
        traj.records.extend(h(state.time, state, ledger) for h in hooks)
        if keep_states:
            traj.states.append(state)

    sample(state0)
    nsteps = step_count(t_end - state0.time, params.dt)
    state = state0
    for n in range(1, nsteps + 1):
        target = state0.time + n * params.dt if n < nsteps else t_end
        step_params = params if np.isclose(target - state.time, params.dt, rtol=1e-9, atol=0) \
            else replace(params, dt=target - state.time)
        try:
            state, report = advance(state, step_params, source)
        except SolverError as err:
            traj.error = err
            err.trajectory = traj
            raise
        state = replace(state, time=target)
        report.time = target
        traj.reports.append(report)
        traj.final = state
        if ledger is not None:
            ledger = update_ledger(ledger, state, step_params, step_params.dt)
            traj.ledger = ledger
        if n % cadence == 0 or n == nsteps:
            sample(state)
    return traj

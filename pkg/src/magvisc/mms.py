"""Manufactured solutions for convergence studies of the planar solver.

The exact fields are smooth, satisfy every boundary condition, and the
forcing that makes them solve the system is derived symbolically.  With the
``"linear"`` time profile every field is affine in time, so the implicit
Euler difference quotient of the exact solution is exact and the local
truncation error is purely spatial; the ``"oscillating"`` profile is used
for the time order.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import sympy as sp

from .grid import (FieldState, GridSpec, SimParams, apply_boundary_conditions, curl_velocity,
                   interior_cells)
from .solver import run

PROFILES = ("linear", "oscillating")
X, Y, T = sp.symbols("x y t", real=True)


def _profile(name: str):
    if name == "linear":
        return 1 + T
    if name == "oscillating":
        return 1 + sp.sin(4 * T) / 2
    raise ValueError(f"profile must be one of {PROFILES}")


@lru_cache(maxsize=8)
def _symbolic(profile: str, nu: float, kappa: float, mu: float):
    tau = _profile(profile)
    pi = sp.pi
    psi = sp.Rational(1, 10) * tau * sp.sin(pi * X) ** 2 * sp.sin(pi * Y) ** 2
    v = [sp.diff(psi, Y), -sp.diff(psi, X)]
    p = sp.Rational(1, 10) * tau * sp.cos(pi * X) * sp.cos(pi * Y)
    K = sp.Matrix([[sp.Rational(2, 5), sp.Rational(1, 5)], [-sp.Rational(1, 10), sp.Rational(3, 10)]])
    F = tau * sp.sin(pi * X) * sp.sin(pi * Y) * K
    M = [sp.Rational(3, 10) * tau * sp.cos(pi * X),
         sp.Rational(1, 5) * tau * sp.cos(pi * Y),
         1 + sp.Rational(1, 10) * tau * sp.cos(pi * X) * sp.cos(pi * Y)]
    xs = (X, Y)
    lap = lambda f: sum(sp.diff(f, c, 2) for c in xs)
    adv = lambda f: sum(v[k] * sp.diff(f, xs[k]) for k in range(2))

    s_v = []
    for i in range(2):
        mag = sum(sp.diff(sum(sp.diff(M[a], xs[i]) * sp.diff(M[a], xs[j]) for a in range(3)), xs[j])
                  for j in range(2))
        ela = sum(sp.diff(sum(F[i, k] * F[j, k] for k in range(2)), xs[j]) for j in range(2))
        s_v.append(sp.diff(v[i], T) + adv(v[i]) + sp.diff(p, xs[i]) + mag - ela - nu * lap(v[i]))
    s_F = [[sp.diff(F[i, j], T) + adv(F[i, j]) - sum(sp.diff(v[i], xs[k]) * F[k, j] for k in range(2))
            - kappa * lap(F[i, j]) for j in range(2)] for i in range(2)]
    m2 = sum(m ** 2 for m in M)
    s_M = [sp.diff(M[a], T) + adv(M[a]) - lap(M[a]) + (m2 - 1) * M[a] / mu ** 2 for a in range(3)]

    f = lambda e: sp.lambdify((X, Y, T), e, "numpy")
    return {
        "psi": f(psi), "v": [f(e) for e in v],
        "F": [[f(F[i, j]) for j in range(2)] for i in range(2)], "M": [f(e) for e in M],
        "s_v": [f(e) for e in s_v], "s_F": [[f(e) for e in row] for row in s_F], "s_M": [f(e) for e in s_M],
    }


def _eval(fn, *args):
    x = args[0]
    return np.broadcast_to(np.asarray(fn(*args), dtype=float), np.shape(x)).copy()


@dataclass
class ManufacturedSolution:
    grid: GridSpec
    params: SimParams
    profile: str = "linear"
    _fns: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.grid.dim != 2:
            raise ValueError("manufactured solutions are provided for the planar solver")
        if any(e != 1.0 for e in self.grid.extent):
            raise ValueError("manufactured solutions live on the unit square")
        c = self.params.coupling
        if not (c.advection and c.stretching and c.magnetic_stress and c.elastic_stress and c.ginzburg_landau):
            raise ValueError("manufactured forcing assumes every coupling is switched on")
        if self.params.has_field or self.params.f_boundary != "zero":
            raise ValueError("manufactured forcing assumes H = 0 and F = 0 on the walls")
        self._fns = _symbolic(self.profile, float(self.params.nu), float(self.params.kappa), float(self.params.mu))

    def _cells(self, fns, t):
        Xc, Yc = self.grid.cell_coords()
        return np.stack([_eval(fn, Xc, Yc, t) for fn in fns], axis=-1)

    def _faces(self, fns, t):
        out = []
        for k in range(2):
            Xf, Yf = self.grid.face_coords(k)
            sl = tuple(slice(1, -1) if j == k else slice(None) for j in range(2))
            out.append(_eval(fns[k], Xf, Yf, t)[sl])
        return tuple(out)

    def source(self, t: float) -> dict:
        fn = self._fns
        F = np.stack([self._cells(row, t) for row in fn["s_F"]], axis=-2)
        return {"v": self._faces(fn["s_v"], t), "F": F, "M": self._cells(fn["s_M"], t)}

    def exact(self, t: float) -> dict:
        fn = self._fns
        F = np.stack([self._cells(row, t) for row in fn["F"]], axis=-2)
        return {"v": self._faces(fn["v"], t), "F": F, "M": self._cells(fn["M"], t)}

    def initial_state(self, t: float = 0.0) -> FieldState:
        g = self.grid
        v = curl_velocity(g, lambda Xn, Yn: _eval(self._fns["psi"], Xn, Yn, t))
        ex = self.exact(t)
        F = np.zeros(g.padded_shape + (2, 2))
        M = np.zeros(g.padded_shape + (3,))
        F[interior_cells(2)] = ex["F"]
        M[interior_cells(2)] = ex["M"]
        return apply_boundary_conditions(FieldState(g, v, np.zeros(g.padded_shape), F, M, t))

    def error(self, state: FieldState) -> dict:
        """Discrete L2 errors of v, F, M and their root-sum-square."""
        ex = self.exact(state.time)
        vol = self.grid.cell_volume
        ev = np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(state.velocity_unknowns(), ex["v"])) * vol)
        eF = np.sqrt(np.sum((state.interior("F") - ex["F"]) ** 2) * vol)
        eM = np.sqrt(np.sum((state.interior("M") - ex["M"]) ** 2) * vol)
        return {"v": float(ev), "F": float(eF), "M": float(eM), "total": float(np.sqrt(ev ** 2 + eF ** 2 + eM ** 2))}


def solve_manufactured(n: int, params: SimParams, profile: str = "linear"):
    """Run the forced problem on an ``n x n`` grid; returns (final state, solution)."""
    ms = ManufacturedSolution(GridSpec(2, n), params, profile)
    traj = run(ms.initial_state(), params, cadence=10 ** 9, track_ledger=False, source=ms.source)
    return traj.final, ms


@dataclass
class ConvergenceResult:
    parameter: str
    values: np.ndarray
    errors: np.ndarray
    orders: np.ndarray

    @property
    def fitted_order(self) -> float:
        """Least-squares slope of log(error) against log(parameter)."""
        return float(np.polyfit(np.log(self.values), np.log(self.errors), 1)[0])

    @property
    def min_order(self) -> float:
        return float(np.min(self.orders))


def _orders(values, errors) -> np.ndarray:
    v, e = np.asarray(values, float), np.asarray(errors, float)
    return np.log(e[:-1] / e[1:]) / np.log(v[:-1] / v[1:])


def spatial_convergence(levels=(32, 64, 128), params: SimParams | None = None) -> ConvergenceResult:
    """Error at ``t_end`` against the exact solution on successively refined
    grids, using the affine-in-time solution so the truncation error has
    no time component."""
    params = params or SimParams(dt=2.5e-3, t_end=0.05)
    errs = [solve_manufactured(n, params, "linear")[0] for n in levels]
    errors = []
    for n, st in zip(levels, errs):
        ms = ManufacturedSolution(GridSpec(2, n), params, "linear")
        errors.append(ms.error(st)["total"])
    h = 1.0 / np.asarray(levels, float)
    return ConvergenceResult("h", h, np.array(errors), _orders(h, errors))


def _distance(a: FieldState, b: FieldState) -> float:
    vol = a.grid.cell_volume
    dv = sum(np.sum((x - y) ** 2) for x, y in zip(a.velocity_unknowns(), b.velocity_unknowns()))
    return float(np.sqrt((dv + np.sum((a.interior("F") - b.interior("F")) ** 2)
                          + np.sum((a.interior("M") - b.interior("M")) ** 2)) * vol))


def temporal_convergence(n: int = 32, dts=(0.02, 0.01, 0.005, 0.0025), t_end: float = 0.2,
                         params: SimParams | None = None) -> ConvergenceResult:
    """Self-convergence in time on a fixed grid: differences between runs
    with successively halved steps, for the oscillating profile."""
    base = params or SimParams()
    finals = [solve_manufactured(n, replace(base, dt=dt, t_end=t_end), "oscillating")[0] for dt in dts]
    diffs = [_distance(a, b) for a, b in zip(finals[:-1], finals[1:])]
    dts = np.asarray(dts[:-1], float)
    return ConvergenceResult("dt", dts, np.array(diffs), _orders(dts, diffs))

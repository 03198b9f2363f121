"""Staggered (MAC) grid geometry, field containers and boundary conditions.

Layout conventions used throughout the package:

* cell-centred fields (``p``, ``F``, ``M``) are stored with one ghost layer on
  every side, i.e. shape ``(n0 + 2, ..., n_{d-1} + 2) + component_shape``;
* velocity component ``k`` lives on the faces normal to axis ``k``.  Along
  axis ``k`` all ``n_k + 1`` faces are stored (the two wall faces carry the
  no-penetration value 0); along every other axis the array carries ghost
  cells, giving length ``n_j + 2``.

Differential operators in :mod:`magvisc.ops` read the ghost values, so callers
run :func:`apply_boundary_conditions` before evaluating them.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np


class ConfigError(ValueError):
    """Invalid geometry, parameters or initial-condition request."""


@dataclass(frozen=True)
class GridSpec:
    dim: int
    cells: tuple[int, ...]
    extent: tuple[float, ...] = ()

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigError(f"dim must be 2 or 3, got {self.dim}")
        cells = self.cells
        if isinstance(cells, (int, np.integer)):
            cells = (int(cells),) * self.dim
        cells = tuple(int(c) for c in cells)
        extent = self.extent or (1.0,) * self.dim
        if isinstance(extent, (int, float)):
            extent = (float(extent),) * self.dim
        extent = tuple(float(e) for e in extent)
        if len(cells) != self.dim or len(extent) != self.dim:
            raise ConfigError("cells and extent need one entry per axis")
        if min(cells) < 4:
            raise ConfigError("cells must be >= 4 along every axis")
        if min(extent) <= 0:
            raise ConfigError("extent must be positive")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "extent", extent)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return tuple(n + 2 for n in self.cells)

    def face_shape(self, k: int) -> tuple[int, ...]:
        """Padded storage shape of velocity component ``k``."""
        return tuple(n + 1 if j == k else n + 2 for j, n in enumerate(self.cells))

    def coords(self, stagger: str) -> list[np.ndarray]:
        """Meshgrid of sample points.

        ``stagger`` has one letter per axis: ``c`` for cell centres (n points),
        ``n`` for nodes/faces (n + 1 points) and ``g`` for cell centres
        including the two ghost positions (n + 2 points).
        """
        axes = []
        for s, n, h in zip(stagger, self.cells, self.spacing):
            if s == "c":
                axes.append((np.arange(n) + 0.5) * h)
            elif s == "n":
                axes.append(np.arange(n + 1) * h)
            elif s == "g":
                axes.append((np.arange(n + 2) - 0.5) * h)
            else:
                raise ValueError(f"unknown stagger code {s!r}")
        return np.meshgrid(*axes, indexing="ij")

    def cell_coords(self) -> list[np.ndarray]:
        return self.coords("c" * self.dim)

    def face_coords(self, k: int, ghosts: bool = False) -> list[np.ndarray]:
        other = "g" if ghosts else "c"
        return self.coords("".join("n" if j == k else other for j in range(self.dim)))


@dataclass(frozen=True)
class CouplingFlags:
    """Switches for isolating individual terms of the coupled system."""

    magnetic_stress: bool = True
    elastic_stress: bool = True
    advection: bool = True
    stretching: bool = True
    ginzburg_landau: bool = True


@dataclass(frozen=True)
class SimParams:
    nu: float = 1.0
    kappa: float = 1.0
    mu: float = 1.0
    dt: float = 1e-3
    t_end: float = 0.1
    h_ext: tuple[float, float, float] = (0.0, 0.0, 0.0)
    coupling: CouplingFlags = field(default_factory=CouplingFlags)
    f_boundary: str = "zero"
    advection_scheme: str = "centered"
    projection: str = "stokes"
    cfl_limit: float = 0.5
    tol: float = 1e-10
    coupling_iterations: int = 40
    coupling_tol: float = 1e-12
    audit_mode: bool = False

    def __post_init__(self):
        for name in ("nu", "mu", "dt", "t_end"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        # kappa = 0 (pure transport of F) is only allowed for oracle audits
        if not (self.kappa > 0 or (self.audit_mode and self.kappa == 0)):
            raise ConfigError("kappa must be strictly positive")
        h = tuple(float(x) for x in self.h_ext)
        if len(h) != 3:
            raise ConfigError("h_ext must be a 3-vector")
        object.__setattr__(self, "h_ext", h)
        if self.f_boundary not in ("zero", "identity"):
            raise ConfigError("f_boundary must be 'zero' or 'identity'")
        if self.advection_scheme not in ("centered", "upwind"):
            raise ConfigError("advection_scheme must be 'centered' or 'upwind'")
        if self.projection not in ("stokes", "chorin"):
            raise ConfigError("projection must be 'stokes' or 'chorin'")
        if int(self.coupling_iterations) < 1:
            raise ConfigError("coupling_iterations must be at least 1")
        if not (self.tol > 0 and self.coupling_tol > 0 and self.cfl_limit > 0):
            raise ConfigError("tolerances and cfl_limit must be positive")

    @property
    def has_field(self) -> bool:
        return any(x != 0.0 for x in self.h_ext)


@dataclass(frozen=True)
class InitialConditionSpec:
    preset: str = "rest"
    params: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class FieldState:
    grid: GridSpec
    v: tuple[np.ndarray, ...]
    p: np.ndarray
    F: np.ndarray
    M: np.ndarray
    time: float = 0.0

    def interior(self, name: str) -> np.ndarray:
        """Interior (non-ghost) cells of ``p``, ``F`` or ``M``."""
        return getattr(self, name)[interior_cells(self.grid.dim)]

    def velocity_unknowns(self) -> tuple[np.ndarray, ...]:
        return tuple(vk[interior_faces(self.grid.dim, k)] for k, vk in enumerate(self.v))

    def copy(self) -> "FieldState":
        return replace(self, v=tuple(vk.copy() for vk in self.v), p=self.p.copy(),
                       F=self.F.copy(), M=self.M.copy())

    def is_finite(self) -> bool:
        arrays = list(self.v) + [self.p, self.F, self.M]
        return all(np.isfinite(a).all() for a in arrays)


def interior_cells(dim: int) -> tuple[slice, ...]:
    return (slice(1, -1),) * dim


def interior_faces(dim: int, k: int) -> tuple[slice, ...]:
    """Velocity unknowns of component ``k``: interior faces, interior cells."""
    return (slice(1, -1),) * dim


def pad_cells(q: np.ndarray, dim: int) -> np.ndarray:
    width = [(1, 1)] * dim + [(0, 0)] * (q.ndim - dim)
    return np.pad(q, width)


def pad_faces(u: np.ndarray, dim: int, k: int) -> np.ndarray:
    """Embed interior-face unknowns of component ``k`` into padded storage."""
    return np.pad(u, [(1, 1)] * dim)


def _axis_slice(ndim: int, axis: int, index) -> tuple:
    sl = [slice(None)] * ndim
    sl[axis] = index
    return tuple(sl)


def _fill_ghosts(q: np.ndarray, dim: int, axes, sign: float, wall=None) -> None:
    """Reflect into the ghost layers along ``axes``.

    ``ghost = sign * interior`` for a homogeneous condition, or
    ``ghost = 2 * wall - interior`` when a wall value is given.
    """
    for ax in axes:
        for g, i in ((0, 1), (-1, -2)):
            inner = q[_axis_slice(q.ndim, ax, i)]
            if wall is None:
                q[_axis_slice(q.ndim, ax, g)] = sign * inner
            else:
                q[_axis_slice(q.ndim, ax, g)] = 2.0 * wall - inner


def fill_velocity(v, dim: int) -> None:
    for k, vk in enumerate(v):
        vk[_axis_slice(dim, k, 0)] = 0.0
        vk[_axis_slice(dim, k, -1)] = 0.0
        _fill_ghosts(vk, dim, [j for j in range(dim) if j != k], -1.0)


def fill_neumann(q: np.ndarray, dim: int) -> None:
    _fill_ghosts(q, dim, range(dim), 1.0)


def fill_dirichlet(q: np.ndarray, dim: int, wall=None) -> None:
    _fill_ghosts(q, dim, range(dim), -1.0, wall)


def f_wall_value(dim: int, f_boundary: str):
    return np.eye(dim) if f_boundary == "identity" else None


def apply_boundary_conditions(state: FieldState, f_boundary: str = "zero") -> FieldState:
    """Return a copy of ``state`` with every ghost layer filled.

    v = 0 and F = 0 (or F = I with ``f_boundary="identity"``) are imposed by
    odd reflection about the wall, dM/dn = 0 and dp/dn = 0 by even reflection.
    """
    out = state.copy()
    dim = state.grid.dim
    fill_velocity(out.v, dim)
    fill_neumann(out.p, dim)
    fill_dirichlet(out.F, dim, f_wall_value(dim, f_boundary))
    fill_neumann(out.M, dim)
    return out


# --------------------------------------------------------------------------
# initial conditions

def _node_envelope(grid: GridSpec, stagger: str) -> np.ndarray:
    """prod_k sin^2(pi x_k / L_k): vanishes with zero slope on every wall."""
    X = grid.coords(stagger)
    env = np.ones_like(X[0])
    for x, L in zip(X, grid.extent):
        env = env * np.sin(np.pi * x / L) ** 2
    return env


def curl_velocity(grid: GridSpec, potential) -> tuple[np.ndarray, ...]:
    """Discretely solenoidal velocity from a potential sampled at nodes/edges.

    2D: ``potential(X, Y)`` is a stream function sampled at the nodes.
    3D: ``potential(X, Y, Z)`` returns the 3 components of a vector potential;
    component ``c`` is sampled on the edges parallel to axis ``c``.
    The returned arrays are in padded face storage; ghosts are left at zero.
    """
    h = grid.spacing
    d = grid.dim
    if d == 2:
        psi = potential(*grid.coords("nn"))
        vx = np.diff(psi, axis=1) / h[1]
        vy = -np.diff(psi, axis=0) / h[0]
        comps = [vx, vy]
    else:
        A = []
        for c in range(3):
            st = "".join("c" if j == c else "n" for j in range(3))
            A.append(potential(*grid.coords(st))[c])
        comps = []
        for a in range(3):
            b, c = (a + 1) % 3, (a + 2) % 3
            comps.append(np.diff(A[c], axis=b) / h[b] - np.diff(A[b], axis=c) / h[c])
    out = []
    for k, u in enumerate(comps):
        width = [(0, 0) if j == k else (1, 1) for j in range(d)]
        out.append(np.pad(u, width))
    return tuple(out)


def _random_modes(rng, grid: GridSpec, stagger: str, kind: str, nmodes: int, decay: float = 2.0):
    """Random smooth field: sum of low sine/cosine products with decaying weights."""
    X = grid.coords(stagger)
    out = np.zeros_like(X[0])
    trig = np.sin if kind == "sin" else np.cos
    for _ in range(nmodes):
        ks = rng.integers(1, 4, size=grid.dim)
        amp = rng.standard_normal() / float(np.sum(ks ** 2)) ** (decay / 2)
        term = np.ones_like(out)
        for x, L, kk in zip(X, grid.extent, ks):
            term = term * trig(kk * np.pi * x / L)
        out += amp * term
    return out


PRESETS = ("rest", "vortex", "random-smooth", "constant-M")


def make_state(grid: GridSpec, ic: InitialConditionSpec | None = None,
               f_boundary: str = "zero") -> FieldState:
    """Build the time-0 state of a named preset.

    Recognised ``ic.params`` keys: ``amplitude`` (velocity scale), ``m0``
    (background magnetisation), ``f_amplitude`` and ``m_amplitude`` (random
    preset), ``seed``, ``modes`` and ``divergence_free``.
    """
    ic = ic or InitialConditionSpec()
    prm = dict(ic.params)
    if ic.preset not in PRESETS:
        raise ConfigError(f"unknown preset {ic.preset!r}; choose from {PRESETS}")
    if not prm.get("divergence_free", True):
        raise ConfigError("initial velocity must be divergence-free for this solver")
    d = grid.dim
    m0 = np.asarray(prm.get("m0", (0.0, 0.0, 1.0)), dtype=float)
    if m0.shape != (3,):
        raise ConfigError("m0 must be a 3-vector")

    v = tuple(np.zeros(grid.face_shape(k)) for k in range(d))
    p = np.zeros(grid.padded_shape)
    F = np.zeros(grid.padded_shape + (d, d))
    M = np.zeros(grid.padded_shape + (3,))
    M[...] = m0
    if f_boundary == "identity":
        F[...] = np.eye(d)

    if ic.preset == "vortex":
        amp = float(prm.get("amplitude", 1.0))
        if d == 2:
            Lx, Ly = grid.extent
            scale = amp * Ly / np.pi

            def psi(X, Y):
                return scale * np.sin(np.pi * X / Lx) ** 2 * np.sin(np.pi * Y / Ly) ** 2
        else:
            axis = np.array(prm.get("axis", (0.3, 0.5, 1.0)))
            axis = axis / np.linalg.norm(axis)
            scale = amp * min(grid.extent) / np.pi

            def psi(X, Y, Z):
                env = scale
                for x, L in zip((X, Y, Z), grid.extent):
                    env = env * np.sin(np.pi * x / L) ** 2
                return [axis[c] * env for c in range(3)]
        v = curl_velocity(grid, psi)
    elif ic.preset == "random-smooth":
        rng = np.random.default_rng(int(prm.get("seed", 12345)))
        amp = float(prm.get("amplitude", 0.5))
        f_amp = float(prm.get("f_amplitude", 0.3))
        m_amp = float(prm.get("m_amplitude", 0.2))
        nm = int(prm.get("modes", 6))
        if d == 2:
            def psi(X, Y):
                base = _random_modes(np.random.default_rng(rng_seed), grid, "nn", "cos", nm)
                return amp * 0.1 * (1.0 + base) * _node_envelope(grid, "nn")
        else:
            def psi(X, Y, Z):
                comps = []
                for c in range(3):
                    st = "".join("c" if j == c else "n" for j in range(3))
                    r = np.random.default_rng(rng_seed + c)
                    base = _random_modes(r, grid, st, "cos", nm)
                    comps.append(amp * 0.1 * (1.0 + base) * _node_envelope(grid, st))
                return comps
        rng_seed = int(rng.integers(2 ** 31))
        v = curl_velocity(grid, psi)
        core = interior_cells(d)
        for i in range(d):
            for j in range(d):
                F[core + (i, j)] += f_amp * _random_modes(rng, grid, "c" * d, "sin", nm)
        for a in range(3):
            M[core + (a,)] += m_amp * _random_modes(rng, grid, "c" * d, "cos", nm)

    state = FieldState(grid, v, p, F, M, 0.0)
    return apply_boundary_conditions(state, f_boundary)

"""Discrete Lebesgue, Sobolev and Bochner norms, and empirical auditors for
the functional inequalities used in the energy and uniqueness estimates."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .grid import GridSpec, fill_dirichlet, fill_neumann, fill_velocity, pad_cells, pad_faces
from . import ops

BOUNDARY_KINDS = ("dirichlet", "neumann")


# --------------------------------------------------------------------------
# space norms

def cell_velocity(v, grid: GridSpec) -> np.ndarray:
    """Average padded face velocities to cell centres, shape ``cells + (d,)``."""
    d = grid.dim
    comps = []
    for k, vk in enumerate(v):
        sl_hi = [slice(1, -1)] * d
        sl_lo = [slice(1, -1)] * d
        sl_hi[k], sl_lo[k] = slice(1, None), slice(None, -1)
        comps.append(0.5 * (vk[tuple(sl_hi)] + vk[tuple(sl_lo)]))
    return np.stack(comps, axis=-1)


def _pointwise(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    a = np.abs(np.asarray(field, dtype=float))
    if a.shape[: grid.dim] != grid.cells:
        raise ValueError(f"field shape {a.shape} does not match grid cells {grid.cells}")
    if a.ndim > grid.dim:
        a = np.sqrt(np.sum(a.reshape(grid.cells + (-1,)) ** 2, axis=-1))
    return a


def space_norm(field, grid: GridSpec, p: float = 2.0) -> float:
    """Midpoint-rule L^p norm of a cell field (Euclidean / Frobenius norm
    pointwise).  A tuple of padded face arrays is treated as a velocity:
    for ``p == 2`` it is integrated on the faces, otherwise averaged to cells."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if isinstance(field, tuple):
        if p == 2:
            inner = (slice(1, -1),) * grid.dim
            return float(np.sqrt(sum(np.sum(vk[inner] ** 2) for vk in field) * grid.cell_volume))
        field = cell_velocity(field, grid)
    a = _pointwise(field, grid)
    if np.isinf(p):
        return float(a.max())
    amax = a.max()
    if amax == 0:
        return 0.0
    # scale out the maximum so high powers cannot overflow
    return float(amax * (np.sum((a / amax) ** p) * grid.cell_volume) ** (1.0 / p))


def _padded(field: np.ndarray, grid: GridSpec, bc: str) -> np.ndarray:
    if bc not in BOUNDARY_KINDS:
        raise ValueError(f"bc must be one of {BOUNDARY_KINDS}")
    q = pad_cells(np.asarray(field, dtype=float), grid.dim)
    (fill_dirichlet if bc == "dirichlet" else fill_neumann)(q, grid.dim)
    return q


def grad_norm(field, grid: GridSpec, bc: str = "dirichlet") -> float:
    """``||grad u||_2`` as ``sqrt(-(L u, u))`` with the boundary condition's
    ghost fill; a tuple of padded face arrays is a no-slip velocity."""
    if isinstance(field, tuple):
        v = tuple(vk.copy() for vk in field)
        fill_velocity(v, grid.dim)
        inner = (slice(1, -1),) * grid.dim
        val = -sum(np.sum(L * vk[inner]) for L, vk in zip(ops.laplacian(v, grid), v))
    else:
        q = _padded(field, grid, bc)
        val = -np.sum(ops.laplacian(q, grid) * q[(slice(1, -1),) * grid.dim])
    return float(np.sqrt(max(val, 0.0) * grid.cell_volume))


def h1_norm(field, grid: GridSpec, bc: str = "dirichlet") -> float:
    return float(np.hypot(space_norm(field, grid, 2), grad_norm(field, grid, bc)))


def laplacian_norm(field: np.ndarray, grid: GridSpec, bc: str = "neumann") -> float:
    return space_norm(ops.laplacian(_padded(field, grid, bc), grid), grid, 2)


def hessian_norm(field: np.ndarray, grid: GridSpec, bc: str = "neumann") -> float:
    """``||grad^2 u||_2`` from all centred second differences, mixed included."""
    q = _padded(field, grid, bc)
    d, h = grid.dim, grid.spacing
    total = 0.0
    for j in range(d):
        for k in range(d):
            if j == k:
                sl = [[slice(1, -1)] * d for _ in range(3)]
                sl[0][j], sl[1][j], sl[2][j] = slice(2, None), slice(1, -1), slice(None, -2)
                D = (q[tuple(sl[0])] - 2 * q[tuple(sl[1])] + q[tuple(sl[2])]) / h[j] ** 2
            else:
                def s(a, b):
                    t = [slice(1, -1)] * d
                    t[j] = slice(2, None) if a > 0 else slice(None, -2)
                    t[k] = slice(2, None) if b > 0 else slice(None, -2)
                    return q[tuple(t)]
                D = (s(1, 1) - s(1, -1) - s(-1, 1) + s(-1, -1)) / (4 * h[j] * h[k])
            total += np.sum(D ** 2)
    return float(np.sqrt(total * grid.cell_volume))


# --------------------------------------------------------------------------
# time norms

@dataclass
class BochnerSeries:
    times: np.ndarray
    values: np.ndarray
    r: float
    s: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1D arrays of equal length")
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("norm values must be non-negative")
        if not (self.r >= 1):
            raise ValueError("r must be >= 1 (use inf for the sup norm)")


def bochner_norm(series: BochnerSeries) -> float:
    """Trapezoid-rule ``(int_0^T value^r dt)^(1/r)``; ``r = inf`` gives the max."""
    if series.times.size < 2:
        raise ValueError("a Bochner norm needs at least two samples")
    if np.isinf(series.r):
        return float(series.values.max())
    vmax = series.values.max()
    if vmax == 0:
        return 0.0
    return float(vmax * trapezoid((series.values / vmax) ** series.r, series.times) ** (1.0 / series.r))


def prodi_serrin_pair(s: float) -> float:
    """Time exponent ``r`` with ``2/r + 3/s = 1``."""
    if not s > 3:
        raise ValueError("the space exponent s must exceed 3")
    return 2.0 * s / (s - 3.0)


# --------------------------------------------------------------------------
# inequality audits

Sample = "np.ndarray | Callable[..., np.ndarray]"


@dataclass
class AuditReport:
    name: str
    ratios: np.ndarray
    stable: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    tolerance: float = 0.05

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios)) if len(self.ratios) else 0.0

    @property
    def all_stable(self) -> bool:
        return all(s is not False for s in self.stable)

    def to_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["sample_id", "ratio", "refinement_stable", "degenerate"])
            for i, (r, s, g) in enumerate(zip(self.ratios, self.stable, self.degenerate)):
                w.writerow([i, repr(float(r)), "na" if s is None else int(bool(s)), int(g)])


def _safe_ratio(num: float, den: float) -> tuple[float, bool]:
    if den == 0.0:
        return 0.0, True
    return num / den, False


def _evaluate(sample, grid: GridSpec) -> np.ndarray:
    if callable(sample):
        return np.asarray(sample(*grid.cell_coords()), dtype=float)
    return np.asarray(sample, dtype=float)


def _audit(name, samples, grid, ratio_fn, tol=0.05, refine=True) -> AuditReport:
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample set")
    fine = GridSpec(grid.dim, tuple(2 * n for n in grid.cells), grid.extent)
    ratios, stable, degen = [], [], []
    for smp in samples:
        r, dg = ratio_fn(_evaluate(smp, grid), grid)
        ratios.append(r)
        degen.append(dg)
        if callable(smp) and refine:
            r2, _ = ratio_fn(_evaluate(smp, fine), fine)
            stable.append(bool(abs(r2 - r) <= tol * max(abs(r), 1e-300) or (r == 0 and r2 == 0)))
        else:
            stable.append(None)
    return AuditReport(name, np.array(ratios), stable, degen, tol)


def ladyzhenskaya_ratio(u: np.ndarray, grid: GridSpec) -> tuple[float, bool]:
    return _safe_ratio(space_norm(u, grid, 4) ** 2,
                       space_norm(u, grid, 2) * grad_norm(u, grid, "dirichlet"))


def audit_ladyzhenskaya(samples, grid: GridSpec, refine: bool = True) -> AuditReport:
    """Empirical constant in ``||u||_4^2 <= C ||u||_2 ||grad u||_2`` for
    planar fields vanishing on the walls."""
    if grid.dim != 2:
        raise ValueError("the Ladyzhenskaya audit is planar")
    return _audit("ladyzhenskaya", samples, grid, ladyzhenskaya_ratio, refine=refine)


def interp3d_ratio(u: np.ndarray, grid: GridSpec, s: float) -> tuple[float, bool]:
    if not s > 3:
        raise ValueError("s must exceed 3")
    q = 2.0 * s / (s - 2.0)
    a2 = space_norm(u, grid, 2)
    g2 = grad_norm(u, grid, "dirichlet")
    return _safe_ratio(space_norm(u, grid, q), a2 ** (1 - 3 / s) * g2 ** (3 / s))


def audit_interp3d(samples, grid: GridSpec, s: float, refine: bool = True) -> AuditReport:
    """Empirical constant in ``||u||_{2s/(s-2)} <= C ||u||_2^(1-3/s) ||grad u||_2^(3/s)``."""
    if not s > 3:
        raise ValueError("s must exceed 3")
    if grid.dim != 3:
        raise ValueError("the interpolation audit is three-dimensional")
    return _audit(f"interp3d_s{s:g}", samples, grid, lambda u, g: interp3d_ratio(u, g, s), refine=refine)


def elliptic_ratio(u: np.ndarray, grid: GridSpec) -> tuple[float, bool]:
    return _safe_ratio(hessian_norm(u, grid), space_norm(u, grid, 2) + laplacian_norm(u, grid))


def audit_elliptic_regularity(samples, grid: GridSpec, refine: bool = True) -> AuditReport:
    """Empirical constant in ``||grad^2 u|| <= C (||u|| + ||Lap u||)`` for
    Neumann fields."""
    return _audit("elliptic", samples, grid, elliptic_ratio, refine=refine)


def random_dirichlet_fields(n_samples: int, dim: int, seed: int = 0, modes: int = 5):
    """Random sine series vanishing on the walls of the unit box (callables)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        K = rng.integers(1, modes + 1, size=(modes, dim))
        c = rng.standard_normal(modes) / np.sum(K ** 2, axis=1)
        def f(*X, K=K, c=c):
            return sum(ci * np.prod([np.sin(np.pi * k * x) for k, x in zip(Ki, X)], axis=0)
                       for ci, Ki in zip(c, K))
        out.append(f)
    return out


def random_neumann_fields(n_samples: int, dim: int, seed: int = 0, modes: int = 5):
    """Random cosine series with zero normal derivative on the walls (callables)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        K = rng.integers(0, modes + 1, size=(modes, dim))
        c = rng.standard_normal(modes) / (1.0 + np.sum(K ** 2, axis=1))
        def f(*X, K=K, c=c):
            return sum(ci * np.prod([np.cos(np.pi * k * x) for k, x in zip(Ki, X)], axis=0)
                       for ci, Ki in zip(c, K))
        out.append(f)
    return out

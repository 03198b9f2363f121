"""Second-order MAC-grid operators and the coupling terms of the momentum,
deformation and magnetisation equations.

All functions are pure.  Inputs are padded arrays with filled ghost layers
(see :mod:`magvisc.grid`); outputs contain interior values only:

* cell outputs have shape ``grid.cells + component_shape``;
* face outputs are tuples whose component ``k`` holds the interior faces
  normal to axis ``k`` (``n_k - 1`` along ``k``, ``n_j`` along the others),
  i.e. exactly the velocity unknowns.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec

SCHEMES = ("centered", "upwind")


@dataclass(frozen=True)
class StencilConfig:
    advection_scheme: str = "centered"
    order: int = 2

    def __post_init__(self):
        if self.advection_scheme not in SCHEMES:
            raise ValueError(f"advection_scheme must be one of {SCHEMES}")
        if self.order != 2:
            raise ValueError("only second-order stencils are provided")


def _sl(ndim: int, axis: int, s: slice, rest: slice = slice(1, -1), ncore: int | None = None):
    """Slice tuple: ``s`` along ``axis``, ``rest`` along the other spatial axes."""
    ncore = ndim if ncore is None else ncore
    out = [rest] * ncore
    out[axis] = s
    return tuple(out)


def _bc(a: np.ndarray, extra: int) -> np.ndarray:
    """Append singleton axes so a spatial array broadcasts over components."""
    return a.reshape(a.shape + (1,) * extra)


def _check(grid: GridSpec, q: np.ndarray) -> None:
    if q.shape[: grid.dim] != grid.padded_shape:
        raise ValueError(f"expected padded shape {grid.padded_shape}, got {q.shape[:grid.dim]}")


def _check_faces(grid: GridSpec, v) -> None:
    if len(v) != grid.dim or any(vk.shape != grid.face_shape(k) for k, vk in enumerate(v)):
        raise ValueError("velocity does not match the grid's face layout")


# --------------------------------------------------------------------------
# basic operators

def gradient(q: np.ndarray, grid: GridSpec, walls: bool = False) -> tuple[np.ndarray, ...]:
    """Face gradient of a cell field.  ``walls=True`` also returns wall faces."""
    _check(grid, q)
    d, h = grid.dim, grid.spacing
    out = []
    for k in range(d):
        hi, lo = (slice(1, None), slice(None, -1)) if walls else (slice(2, -1), slice(1, -2))
        out.append((q[_sl(d, k, hi)] - q[_sl(d, k, lo)]) / h[k])
    return tuple(out)


def divergence(u, grid: GridSpec) -> np.ndarray:
    """Cell divergence of a face vector field in padded storage."""
    _check_faces(grid, u)
    d, h = grid.dim, grid.spacing
    div = np.zeros(grid.cells)
    for k in range(d):
        div += (u[k][_sl(d, k, slice(1, None))] - u[k][_sl(d, k, slice(None, -1))]) / h[k]
    return div


def _lap(a: np.ndarray, d: int, h) -> np.ndarray:
    out = 0.0
    for k in range(d):
        out = out + (a[_sl(d, k, slice(2, None))] - 2.0 * a[_sl(d, k, slice(1, -1))]
                     + a[_sl(d, k, slice(None, -2))]) / h[k] ** 2
    return out


def laplacian(q, grid: GridSpec):
    """Standard 2d+1 point Laplacian of a cell field (any rank) or of a face
    vector field (tuple); the ghost layers supply the boundary condition."""
    if isinstance(q, tuple):
        _check_faces(grid, q)
        return tuple(_lap(qk, grid.dim, grid.spacing) for qk in q)
    _check(grid, q)
    return _lap(q, grid.dim, grid.spacing)


# --------------------------------------------------------------------------
# transport

def _combine(U: np.ndarray, dq: np.ndarray, axis: int, scheme: str) -> np.ndarray:
    """Average transport products from the two dual points around each node.

    ``U`` and ``dq`` live on the ``m + 1`` dual points bracketing ``m`` nodes
    along ``axis``; ``dq`` may carry trailing component axes.
    """
    extra = dq.ndim - U.ndim
    nd = U.ndim
    hi, lo = _sl(nd, axis, slice(1, None), slice(None)), _sl(nd, axis, slice(None, -1), slice(None))
    if scheme == "centered":
        prod = _bc(U, extra) * dq
        return 0.5 * (prod[hi] + prod[lo])
    ubar = _bc(0.5 * (U[hi] + U[lo]), extra)
    return np.where(ubar > 0, ubar * dq[lo], ubar * dq[hi])


def advect(v, q: np.ndarray, grid: GridSpec, scheme: str = "centered") -> np.ndarray:
    """(v . grad) q for a cell field ``q`` of any rank.

    The centred variant is the skew-symmetric form: ``sum(q * advect(v, q))``
    vanishes to round-off for every face field ``v`` with zero wall flux.
    """
    _check(grid, q)
    _check_faces(grid, v)
    d, h = grid.dim, grid.spacing
    extra = q.ndim - d
    out = 0.0
    for k in range(d):
        U = v[k][_sl(d, k, slice(None))]
        dq = (q[_sl(d, k, slice(1, None))] - q[_sl(d, k, slice(None, -1))]) / h[k]
        out = out + _combine(U, dq, k, scheme)
    if scheme == "centered":
        out = out + 0.5 * q[(slice(1, -1),) * d] * _bc(divergence(v, grid), extra)
    return out


def momentum_advection(v, grid: GridSpec, scheme: str = "centered") -> tuple[np.ndarray, ...]:
    """(v . grad) v on the staggered velocity control volumes.

    Centred form is skew-symmetric: the discrete kinetic energy is not changed
    by it, for any velocity with zero wall flux.
    """
    _check_faces(grid, v)
    d, h = grid.dim, grid.spacing
    div = divergence(v, grid)
    out = []
    for i in range(d):
        u = v[i]
        acc = 0.0
        for k in range(d):
            if k == i:
                sl_all = _sl(d, i, slice(None))
                w = u[sl_all]
                U = 0.5 * (w[_sl(d, i, slice(1, None), slice(None))] + w[_sl(d, i, slice(None, -1), slice(None))])
                dq = (w[_sl(d, i, slice(1, None), slice(None))] - w[_sl(d, i, slice(None, -1), slice(None))]) / h[i]
                acc = acc + _combine(U, dq, i, scheme)
            else:
                sel = [slice(1, -1)] * d
                sel[k] = slice(None)
                sel_lo, sel_hi = list(sel), list(sel)
                sel_lo[i], sel_hi[i] = slice(1, -2), slice(2, -1)
                U = 0.5 * (v[k][tuple(sel_lo)] + v[k][tuple(sel_hi)])
                ui = u[tuple(sel)]
                dq = (ui[_sl(d, k, slice(1, None), slice(None))] - ui[_sl(d, k, slice(None, -1), slice(None))]) / h[k]
                acc = acc + _combine(U, dq, k, scheme)
        if scheme == "centered":
            div_cv = 0.5 * (div[_sl(d, i, slice(1, None), slice(None))] + div[_sl(d, i, slice(None, -1), slice(None))])
            acc = acc + 0.5 * u[(slice(1, -1),) * d] * div_cv
        out.append(acc)
    return tuple(out)


# --------------------------------------------------------------------------
# velocity gradient and stresses

def velocity_gradient(v, grid: GridSpec) -> np.ndarray:
    """Cell-centred ``G[..., i, k] = d v_i / d x_k``."""
    _check_faces(grid, v)
    d, h = grid.dim, grid.spacing
    G = np.zeros(grid.cells + (d, d))
    for i in range(d):
        vi = v[i]
        for k in range(d):
            if i == k:
                G[..., i, i] = (vi[_sl(d, i, slice(1, None))] - vi[_sl(d, i, slice(None, -1))]) / h[i]
                continue
            sel = [slice(1, -1)] * d
            sel[k] = slice(None)
            sel_lo, sel_hi = list(sel), list(sel)
            sel_lo[i], sel_hi[i] = slice(None, -1), slice(1, None)
            vbar = 0.5 * (vi[tuple(sel_lo)] + vi[tuple(sel_hi)])
            G[..., i, k] = (vbar[_sl(d, k, slice(2, None), slice(None))]
                            - vbar[_sl(d, k, slice(None, -2), slice(None))]) / (2 * h[k])
    return G


def velocity_gradient_adjoint(T: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Transpose of :func:`velocity_gradient` with respect to the velocity
    unknowns (no-slip ghosts folded in): ``sum(w . v) == sum(T : grad v)``."""
    d, h = grid.dim, grid.spacing
    if T.shape != grid.cells + (d, d):
        raise ValueError("tensor field does not match the grid")
    out = [np.zeros(tuple(n - 1 if j == k else n for j, n in enumerate(grid.cells))) for k in range(d)]
    full = slice(None)
    for i in range(d):
        for k in range(d):
            Tik = T[..., i, k]
            if i == k:
                out[i] -= (Tik[_sl(d, i, slice(1, None), full)] - Tik[_sl(d, i, slice(None, -1), full)]) / h[i]
                continue
            width = [(0, 0)] * d
            width[k] = (1, 1)
            Tp = np.pad(Tik, width)
            W = (Tp[_sl(d, k, slice(None, -2), full)] - Tp[_sl(d, k, slice(2, None), full)]) / (2 * h[k])
            W[_sl(d, k, 0, full)] += Tik[_sl(d, k, 0, full)] / (2 * h[k])
            W[_sl(d, k, -1, full)] -= Tik[_sl(d, k, -1, full)] / (2 * h[k])
            out[i] += 0.5 * (W[_sl(d, i, slice(1, None), full)] + W[_sl(d, i, slice(None, -1), full)])
    return tuple(out)


def tensor_divergence(T: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, ...]:
    """Row-wise divergence of a cell tensor, defined as minus the adjoint of
    :func:`velocity_gradient` so that ``(div T, v) = -(T, grad v)`` exactly."""
    return tuple(-w for w in velocity_gradient_adjoint(T, grid))


def velocity_gradient_times_F(v, F: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``(grad v F)_ij = sum_k d_k v_i F_kj`` at cell centres."""
    _check(grid, F)
    G = velocity_gradient(v, grid)
    return np.einsum("...ik,...kj->...ij", G, F[(slice(1, -1),) * grid.dim])


def elastic_stress_div(F: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, ...]:
    """div(F F^T) on the velocity faces."""
    _check(grid, F)
    Fc = F[(slice(1, -1),) * grid.dim]
    return tensor_divergence(np.einsum("...ik,...jk->...ij", Fc, Fc), grid)


def _centered_grad(q: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Cell-centred central differences; shape ``cells + comps + (dim,)``."""
    d, h = grid.dim, grid.spacing
    parts = [(q[_sl(d, k, slice(2, None))] - q[_sl(d, k, slice(None, -2))]) / (2 * h[k]) for k in range(d)]
    return np.stack(parts, axis=-1)


def magnetic_tensor(M: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``(grad^T M grad M)_ij = sum_a d_i M_a d_j M_a`` at cell centres."""
    _check(grid, M)
    J = _centered_grad(M, grid)  # [..., a, j]
    return np.einsum("...ai,...aj->...ij", J, J)


def magnetic_force(M: np.ndarray, grid: GridSpec, lap_M: np.ndarray | None = None) -> tuple[np.ndarray, ...]:
    """``grad^T M  Lap M`` on the faces: face gradient of each component of M
    times the face average of its Laplacian.

    This is the transpose of ``v -> advect(v, M)`` applied to ``Lap M``
    (up to a discrete gradient), which is what makes the magnetic work in
    the momentum equation cancel the transport work in the M equation.
    """
    _check(grid, M)
    d = grid.dim
    Q = laplacian(M, grid) if lap_M is None else lap_M
    grads = gradient(M, grid)
    out = []
    for k in range(d):
        full = slice(None)
        Qf = 0.5 * (Q[_sl(d, k, slice(1, None), full)] + Q[_sl(d, k, slice(None, -1), full)])
        out.append(np.sum(grads[k] * Qf, axis=-1))
    return tuple(out)


def magnetic_stress_div(M: np.ndarray, grid: GridSpec, form: str = "divergence") -> tuple[np.ndarray, ...]:
    """div(grad^T M grad M) on the faces.

    ``form="divergence"`` differentiates the assembled tensor;
    ``form="split"`` evaluates ``1/2 grad |grad M|^2 + grad^T M Lap M``.
    The two agree to second order away from the walls.
    """
    _check(grid, M)
    if form == "divergence":
        return tensor_divergence(magnetic_tensor(M, grid), grid)
    if form != "split":
        raise ValueError("form must be 'divergence' or 'split'")
    d = grid.dim
    J = _centered_grad(M, grid)
    energy = 0.5 * np.sum(J ** 2, axis=(-2, -1))
    energy = np.pad(energy, [(1, 1)] * d, mode="edge")
    gpart = gradient(energy, grid)
    return tuple(g + f for g, f in zip(gpart, magnetic_force(M, grid)))


def ginzburg_landau(M: np.ndarray, mu: float) -> np.ndarray:
    """Pointwise (|M|^2 - 1) M / mu^2."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return (np.sum(M * M, axis=-1, keepdims=True) - 1.0) * M / mu ** 2

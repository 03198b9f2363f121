"""Direct solvers for the constant-coefficient operators of the MAC grid.

Each boundary condition diagonalises the 1D three-point Laplacian with a
real trigonometric transform, so shifted Laplace problems cost a few FFTs:

* ``"N"``  cell field, homogeneous Neumann (DCT-II);
* ``"D"``  cell field, homogeneous Dirichlet at the wall (DST-II);
* ``"DI"`` face field normal to the wall, zero on the wall faces (DST-I).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft

_FORWARD = {"N": (fft.dct, 2), "D": (fft.dst, 2), "DI": (fft.dst, 1)}
_INVERSE = {"N": (fft.idct, 2), "D": (fft.idst, 2), "DI": (fft.idst, 1)}


def eigenvalues(kind: str, n: int, h: float) -> np.ndarray:
    """Eigenvalues of the 1D Laplacian with ``n`` cells of width ``h``."""
    if kind == "N":
        j = np.arange(n)
    elif kind == "D":
        j = np.arange(1, n + 1)
    elif kind == "DI":
        j = np.arange(1, n)
    else:
        raise ValueError(f"unknown boundary kind {kind!r}")
    return -(2.0 - 2.0 * np.cos(np.pi * j / n)) / h ** 2


@lru_cache(maxsize=64)
def _symbol(kinds, cells, h, ndim_total):
    lam = 0.0
    for k, kind in enumerate(kinds):
        shape = [1] * ndim_total
        e = eigenvalues(kind, cells[k], h[k])
        shape[k] = e.size
        lam = lam + e.reshape(shape)
    lam = np.asarray(lam, dtype=float)
    lam.setflags(write=False)
    return lam


def _transform(a, kinds, table):
    for k, kind in enumerate(kinds):
        f, t = table[kind]
        a = f(a, type=t, axis=k, norm="ortho")
    return a


def solve_shifted(rhs: np.ndarray, kinds, cells, h, shift: float, scale: float) -> np.ndarray:
    """Solve ``(shift - scale * L) u = rhs``.

    With ``shift == 0`` and all-Neumann boundaries the constant mode is
    removed: the solution has zero mean and the rhs mean is ignored.
    """
    hat = _transform(np.asarray(rhs, dtype=float), kinds, _FORWARD)
    sym = shift - scale * _symbol(tuple(kinds), tuple(cells), tuple(float(x) for x in h), hat.ndim)
    singular = sym == 0
    if np.any(singular):
        sym = np.where(singular, 1.0, sym)
        hat = hat / sym
        hat[np.broadcast_to(singular, hat.shape)] = 0.0
    else:
        hat = hat / sym
    return _transform(hat, kinds, _INVERSE)


def poisson_neumann(rhs: np.ndarray, cells, h) -> np.ndarray:
    """Zero-mean solution of ``L u = rhs`` with Neumann walls."""
    return solve_shifted(rhs, ["N"] * len(cells), cells, h, 0.0, -1.0)


def helmholtz_neumann(rhs: np.ndarray, cells, h, a: float) -> np.ndarray:
    """``(I - a L) u = rhs`` for a Neumann cell field (trailing components allowed)."""
    return solve_shifted(rhs, ["N"] * len(cells), cells, h, 1.0, a)


def helmholtz_dirichlet(rhs: np.ndarray, cells, h, a: float) -> np.ndarray:
    """``(I - a L) u = rhs`` for a cell field vanishing on the walls."""
    return solve_shifted(rhs, ["D"] * len(cells), cells, h, 1.0, a)


def helmholtz_velocity(rhs, cells, h, a: float) -> tuple[np.ndarray, ...]:
    """Componentwise ``(I - a L) u = rhs`` for no-slip face velocities."""
    d = len(cells)
    out = []
    for k, r in enumerate(rhs):
        kinds = ["DI" if j == k else "D" for j in range(d)]
        out.append(solve_shifted(r, kinds, cells, h, 1.0, a))
    return tuple(out)

"""Empirical constants of the functional inequalities behind the estimates.

Ladyzhenskaya's inequality is sampled on random fields vanishing on the
walls, the elliptic estimate on a Neumann cosine, and the two pointwise
bounds for the cubic Ginzburg-Landau term on random vector pairs.
"""
import numpy as np

from magvisc import GridSpec
from magvisc.diagnostics import cubic_monotonicity_check
from magvisc.norms import (audit_elliptic_regularity, audit_interp3d, audit_ladyzhenskaya, ladyzhenskaya_ratio,
                           random_dirichlet_fields)

g = GridSpec(2, 64)
lady = audit_ladyzhenskaya(random_dirichlet_fields(100, 2, seed=1), g)
print(f"Ladyzhenskaya: max ratio {lady.max_ratio:.4f} over {lady.ratios.size} fields, "
      f"refinement-stable: {lady.all_stable}")

X, Y = g.cell_coords()
exact = 3 * np.sqrt(2) / (4 * np.pi)
print(f"sin(pi x) sin(pi y): {ladyzhenskaya_ratio(np.sin(np.pi * X) * np.sin(np.pi * Y), g)[0]:.5f} "
      f"(closed form {exact:.5f})")

ell = audit_elliptic_regularity([lambda X, Y: np.cos(np.pi * X)], g)
print(f"elliptic, cos(pi x): {ell.ratios[0]:.5f} (closed form {np.pi ** 2 / (1 + np.pi ** 2):.5f})")

rep3 = audit_interp3d(random_dirichlet_fields(10, 3, seed=2), GridSpec(3, 16), s=4.0)
print(f"3D interpolation, s = 4: max ratio {rep3.max_ratio:.4f}, refinement-stable: {rep3.all_stable}")

rng = np.random.default_rng(0)
cubic = cubic_monotonicity_check(rng.standard_normal((10 ** 6, 3)), rng.standard_normal((10 ** 6, 3)))
print(f"cubic term over 1e6 pairs: min monotone product {cubic.min_dot:.3e}, "
      f"max bound ratio {cubic.max_bound_ratio:.4f}, passed: {cubic.passed}")

"""Order of accuracy from manufactured solutions.

A smooth exact solution satisfying every boundary condition is forced into
the equations.  Refining the grid gives the spatial order; halving the step
on a fixed grid gives the temporal order of the implicit Euler scheme.
"""
from magvisc.mms import spatial_convergence, temporal_convergence

sp = spatial_convergence((16, 32, 64))
for h, e in zip(sp.values, sp.errors):
    print(f"h = {h:.4f}  error = {e:.3e}")
print(f"spatial orders: {sp.orders.round(3)}")

tm = temporal_convergence(n=16)
print(f"temporal orders: {tm.orders.round(3)}")

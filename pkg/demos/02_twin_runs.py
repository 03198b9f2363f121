"""Stability of the solution map under small perturbations.

Two copies of the vortex start a distance delta apart; the difference
functional f = 1/2 (|dv|^2 + |dF|^2 + |dM|^2 + |grad dM|^2) is tracked.  For
a Lipschitz solution map the amplification f(T)/f(0) does not depend on
delta, and a zero perturbation reproduces the run bit for bit.
"""
from magvisc import GridSpec, InitialConditionSpec, SimParams, make_state, run_twin_experiment

state = make_state(GridSpec(2, 32), InitialConditionSpec("vortex"))
exp = run_twin_experiment(state, SimParams(dt=2e-3, t_end=0.1), deltas=(0.0, 1e-4, 1e-5, 1e-6))

print(f"{'delta':>8s} {'f(T)/f(0)':>14s} {'identical':>10s} {'C_fit':>10s} {'C_bound':>10s}")
for r in exp.runs:
    print(f"{r.delta:8.0e} {r.ratio:14.8f} {str(r.identical):>10s} "
          f"{r.constants['C_fit']:10.4f} {r.constants['C_bound']:10.4f}")
print("verdict:", "PASS" if exp.verdict else "FAIL", *exp.reasons)

"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line; the lines are also collected
into the terminal summary.
"""
import numpy as np

from conftest import ACCEPTANCE_LINES
from magvisc.diagnostics import (cubic_monotonicity_check, helmholtz_energy, prodi_serrin_monitor,
                                 run_twin_experiment, stress_identity_audit)
from magvisc.galerkin import (GalerkinParams, assemble_basis, assemble_convection_tensor, default_initial_data,
                              galerkin_energy_check, m_convergence, modal_energy_drift, run_galerkin, skew_defect)
from magvisc.grid import GridSpec, InitialConditionSpec, SimParams, make_state
from magvisc.mms import spatial_convergence, temporal_convergence
from magvisc.norms import (audit_elliptic_regularity, audit_ladyzhenskaya, ladyzhenskaya_ratio,
                           random_dirichlet_fields)
from magvisc.solver import run

PRESETS_2D = ("rest", "vortex", "random-smooth", "constant-M")


def verdict(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_c01_divergence_free():
    g = GridSpec(2, 128)
    traj = run(make_state(g, InitialConditionSpec("vortex")), SimParams(dt=1e-3, t_end=0.5), cadence=10 ** 6,
               track_ledger=False)
    div = np.array([r.residuals["divergence"] for r in traj.reports])
    verdict(1, "divergence-free enforcement", traj.steps == 500 and div.max() <= 1e-10,
            f"{traj.steps} steps, max |div v| = {div.max():.2e} (limit 1e-10)")


def _min_slack(preset, dt):
    s = make_state(GridSpec(2, 32), InitialConditionSpec(preset))
    traj = run(s, SimParams(dt=dt, t_end=0.1), [lambda t, st, led: led.slack], cadence=1)
    return min(traj.records[1:]), traj.ledger.rhs


def test_c02_energy_inequality():
    ok, parts = True, []
    for preset in PRESETS_2D:
        (s1, rhs), (s2, _) = _min_slack(preset, 2e-3), _min_slack(preset, 1e-3)
        neg1, neg2 = max(0.0, -s1), max(0.0, -s2)
        ok &= s1 >= -1e-8 * rhs and s2 >= -1e-8 * rhs and neg2 <= 0.5 * neg1
        parts.append(f"{preset} min slack {min(s1, s2):.2e}, negative part {neg1:.1e} -> {neg2:.1e}")
    verdict(2, "not-quite-energy inequality", ok, "; ".join(parts))


def test_c03_lyapunov_decay():
    ok, worst = True, -np.inf
    dt = 2e-3
    ics = [InitialConditionSpec(p) for p in PRESETS_2D] + [
        InitialConditionSpec("random-smooth", {"seed": s}) for s in (1, 2, 3)]
    for ic in ics:
        p = SimParams(dt=dt, t_end=0.2)
        traj = run(make_state(GridSpec(2, 32), ic), p, [lambda t, st, led: helmholtz_energy(st, p)], cadence=1,
                   track_ledger=False)
        rise = float(np.max(np.diff(traj.records)))
        worst = max(worst, rise)
        ok &= rise <= dt ** 2
    verdict(3, "Lyapunov decay of psi", ok, f"largest one-step increase {worst:.2e} (allowance dt^2 = {dt ** 2:.0e})")


def test_c04_fixed_point():
    s = make_state(GridSpec(2, 32), InitialConditionSpec("constant-M"))
    traj = run(s, SimParams(dt=1e-3, t_end=1.0), cadence=10 ** 6, track_ledger=False)
    f = traj.final
    dev = max(max(np.abs(v).max() for v in f.v), np.abs(f.F).max(), np.abs(f.M - s.M).max())
    verdict(4, "stationary fixed point", traj.steps == 1000 and dev <= 1e-14,
            f"{traj.steps} steps, max deviation {dev:.1e}")


def test_c05_manufactured_convergence():
    sp = spatial_convergence((32, 64, 128))
    tm = temporal_convergence()
    verdict(5, "manufactured-solution convergence", sp.min_order >= 1.9 and tm.min_order >= 0.9,
            f"spatial orders {np.round(sp.orders, 3).tolist()}, temporal orders {np.round(tm.orders, 3).tolist()}")


def test_c06_twin_2d():
    s = make_state(GridSpec(2, 32), InitialConditionSpec("vortex"))
    exp = run_twin_experiment(s, SimParams(dt=2e-3, t_end=0.1), deltas=(0.0, 1e-4, 1e-5, 1e-6), spread=2.0)
    zero = exp.runs[0]
    ratios = [r.ratio for r in exp.runs[1:]]
    ok = zero.identical and max(ratios) <= 2 * min(ratios) and np.isfinite(ratios).all()
    verdict(6, "2D uniqueness shadow", ok and exp.verdict,
            f"f(T)/f(0) = {[f'{r:.6g}' for r in ratios]}, delta=0 bit-identical: {zero.identical}")


def test_c07_weak_strong_3d():
    g = GridSpec(3, 32)
    s = make_state(g, InitialConditionSpec("random-smooth"))
    finals = []
    for dt in (4e-3, 2e-3):
        traj = run(s, SimParams(dt=dt, t_end=0.04), cadence=1, keep_states=True, track_ledger=False)
        finals.append(prodi_serrin_monitor(traj, 4.0).final)
    a, b = finals
    change = np.abs(b - a) / np.abs(b)
    exp = run_twin_experiment(s, SimParams(dt=4e-3, t_end=0.04), deltas=(0.0, 1e-4, 1e-5, 1e-6), cadence=2,
                              mode=3, s=4.0)
    ratios = [r.ratio for r in exp.runs[1:]]
    ok = bool(np.all(np.isfinite(b)) and np.all(change <= 0.10) and exp.verdict)
    verdict(7, "3D weak-strong shadow", ok,
            f"L^8(L^4) norms {np.round(b, 5).tolist()}, dt-halving change {np.round(change, 3).tolist()}, "
            f"twin ratios {[f'{r:.6g}' for r in ratios]}")


def test_c08_inequality_audits():
    g = GridSpec(2, 64)
    lady = audit_ladyzhenskaya(random_dirichlet_fields(100, 2, seed=2024), g)
    X, Y = g.cell_coords()
    sin_ratio = ladyzhenskaya_ratio(np.sin(np.pi * X) * np.sin(np.pi * Y), g)[0]
    ell = audit_elliptic_regularity([lambda X, Y: np.cos(np.pi * X)], g)
    target = np.pi ** 2 / (1 + np.pi ** 2)
    rng = np.random.default_rng(2024)
    cubic = cubic_monotonicity_check(rng.standard_normal((10 ** 6, 3)), rng.standard_normal((10 ** 6, 3)))
    checks = [lady.max_ratio <= 0.5 and lady.all_stable, abs(sin_ratio - 0.3376) <= 2e-3,
              abs(ell.ratios[0] - target) <= 1e-2, cubic.passed]
    verdict(8, "inequality audits", all(checks),
            f"Ladyzhenskaya max {lady.max_ratio:.4f} (stable {lady.all_stable}), sin*sin {sin_ratio:.5f}, "
            f"elliptic {ell.ratios[0]:.5f} vs {target:.5f}, cubic violations "
            f"{cubic.monotone_violations.size + cubic.bound_violations.size}")


def test_c09_galerkin():
    basis = assemble_basis(32)
    A = assemble_convection_tensor(basis)
    skew = skew_defect(A)
    g0 = default_initial_data(8, 32)[0]
    drift = np.array([modal_energy_drift(32, dt, int(round(0.1 / dt)), g0=g0, A=A) for dt in (1e-3, 5e-4, 2.5e-4)])
    drift_rates = np.log2(drift[:-1] / drift[1:])
    viol = []
    for dt in (2e-3, 1e-3):
        viol.append(galerkin_energy_check(run_galerkin(8, GalerkinParams(dt=dt, t_end=0.05))).max_violation)
    diffs = m_convergence((4, 8, 16))
    ok = skew <= 1e-13 and np.all(drift_rates >= 3.5) and viol[1] <= 0.5 * viol[0] and np.all(np.diff(diffs) < 0)
    verdict(9, "Galerkin module", bool(ok),
            f"skew {skew:.1e}, energy drift orders {np.round(drift_rates, 2).tolist()}, "
            f"inequality violation {viol[0]:.1e} -> {viol[1]:.1e}, |v_m - v_2m| {np.round(diffs, 5).tolist()}")


def test_c10_stress_identity():
    rep = stress_identity_audit((32, 64, 128))
    verdict(10, "stress identity", rep.min_order >= 1.9,
            f"residuals {[f'{r:.3e}' for r in rep.residuals]}, orders {np.round(rep.orders, 3).tolist()}")

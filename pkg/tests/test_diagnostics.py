from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from magvisc.diagnostics import (GRONWALL_COLUMNS, LEDGER_COLUMNS, GronwallRecord, PerturbationSpec,
                                 cubic_monotonicity_check, difference_functional, fit_gronwall_constant,
                                 helmholtz_energy, identity_residual, new_ledger, perturb, prodi_serrin_monitor,
                                 run_twin_experiment, stress_identity_residual, total_energy, twin_run)
from magvisc.grid import GridSpec, InitialConditionSpec, SimParams, apply_boundary_conditions, make_state
from magvisc.ops import divergence
from magvisc.solver import run

G16 = GridSpec(2, 16)


def test_helmholtz_energy_hand_values():
    s = make_state(G16, InitialConditionSpec("constant-M", {"m0": (2.0, 0.0, 0.0)}))
    # (|M|^2 - 1)^2 / (4 mu^2) = 9 / 4 on the unit square
    assert helmholtz_energy(s, SimParams()) == pytest.approx(2.25)
    assert helmholtz_energy(s, SimParams(h_ext=(1.0, 0.0, 0.0))) == pytest.approx(0.25)
    assert helmholtz_energy(s, SimParams(mu=0.5)) == pytest.approx(9.0)
    rest = make_state(G16, InitialConditionSpec("constant-M"), f_boundary="identity")
    assert helmholtz_energy(rest, SimParams()) == pytest.approx(1.0)   # 1/2 |I|^2
    assert total_energy(rest, SimParams()) == pytest.approx(1.0)


@pytest.mark.parametrize("preset", ["rest", "vortex", "random-smooth", "constant-M"])
def test_ledger_slack_nonnegative(preset):
    s = make_state(G16, InitialConditionSpec(preset))
    p = SimParams(dt=2e-3, t_end=0.02)
    traj = run(s, p, [lambda t, st, led: led.row()], cadence=1)
    rows = np.array(traj.records)
    assert rows.shape[1] == len(LEDGER_COLUMNS)
    rhs = traj.ledger.rhs
    assert np.all(rows[:, LEDGER_COLUMNS.index("slack")] >= -1e-8 * max(rhs, 1.0))


def test_ledger_starts_balanced():
    s = make_state(G16, InitialConditionSpec("random-smooth"))
    led = new_ledger(s, SimParams())
    assert led.slack == 0.0 and led.lhs == pytest.approx(led.rhs)


def test_difference_functional_properties():
    a = make_state(G16, InitialConditionSpec("random-smooth", {"seed": 1}))
    b = make_state(G16, InitialConditionSpec("random-smooth", {"seed": 2}))
    assert difference_functional(a, a) == 0.0
    assert difference_functional(a, b) == pytest.approx(difference_functional(b, a))
    with pytest.raises(ValueError):
        difference_functional(a, make_state(GridSpec(2, 8)))


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-8, 1e-2), st.integers(0, 1000))
def test_perturbation_size_and_structure(delta, seed):
    s = make_state(G16, InitialConditionSpec("vortex"))
    out = perturb(s, PerturbationSpec(delta, ("v", "F", "M"), seed))
    dv = max(np.abs(a - b).max() for a, b in zip(out.v, s.v))
    assert dv == pytest.approx(delta, rel=1e-12)
    assert np.abs(out.interior("F") - s.interior("F")).max() == pytest.approx(delta, rel=1e-12)
    assert np.abs(divergence(out.v, G16)).max() < 1e-12


def test_perturb_rejects_unknown_field():
    with pytest.raises(ValueError):
        perturb(make_state(G16), PerturbationSpec(1e-3, ("q",)))


def test_zero_perturbation_twin_is_bit_identical():
    s = make_state(G16, InitialConditionSpec("vortex"))
    r = twin_run(s, SimParams(dt=2e-3, t_end=0.01), PerturbationSpec(0.0))
    assert r.identical and all(rec.f == 0 for rec in r.records) and r.ratio == 0.0


def test_difference_identity_residual_is_first_order():
    s = make_state(G16, InitialConditionSpec("random-smooth"))
    res = []
    for dt in (4e-3, 2e-3):
        r = twin_run(s, SimParams(dt=dt, t_end=0.02), PerturbationSpec(1e-4), cadence=1)
        f0 = r.records[0].f
        res.append(abs(identity_residual(r.records)[-1]) / f0)
    assert res[1] < 0.6 * res[0]


def test_twin_experiment_verdict():
    s = make_state(G16, InitialConditionSpec("vortex"))
    exp = run_twin_experiment(s, SimParams(dt=2e-3, t_end=0.01), deltas=(0.0, 1e-4, 1e-6))
    assert exp.verdict and not exp.reasons
    assert exp.ratios[1e-4] == pytest.approx(exp.ratios[1e-6], rel=1e-3)


def test_gronwall_constant_fit_on_synthetic_growth():
    t = np.linspace(0, 1, 11)
    recs = [GronwallRecord(tt, np.exp(2 * tt), 0.0, 1.0, np.zeros(9)) for tt in t]
    c = fit_gronwall_constant(recs)
    assert c["C_fit"] == pytest.approx(2.0) and c["C_bound"] == pytest.approx(2.0)
    assert len(recs[0].row()) == len(GRONWALL_COLUMNS)
    assert fit_gronwall_constant(recs[:1]) == {"C_fit": 0.0, "C_bound": 0.0}


def test_prodi_serrin_monitor_columns_and_exponent():
    g = GridSpec(3, 8)
    s = make_state(g, InitialConditionSpec("random-smooth"))
    traj = run(s, SimParams(dt=2e-3, t_end=0.006), cadence=1, keep_states=True, track_ledger=False)
    log = prodi_serrin_monitor(traj, 4.0)
    assert log.r == 8.0
    rows = list(log.rows())
    assert len(rows) == 4 and len(rows[0]) == len(log.COLUMNS)
    assert np.all(np.isfinite(log.final)) and np.all(log.final > 0)
    with pytest.raises(ValueError):
        prodi_serrin_monitor([], 4.0)
    with pytest.raises(ValueError):
        prodi_serrin_monitor(traj, 3.0)


vec3 = arrays(np.float64, (50, 3), elements=st.floats(-1e3, 1e3))


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_cubic_inequalities_hold(a, b):
    rep = cubic_monotonicity_check(a, b)
    assert rep.passed


def test_cubic_check_hand_case():
    rep = cubic_monotonicity_check(np.array([[2.0, 0, 0]]), np.array([[1.0, 0, 0]]))
    # (8 - 1)(2 - 1) = 7 and |8 - 1| = 7 <= 3/2 * 1 * 5
    assert rep.min_dot == pytest.approx(7.0) and rep.max_bound_ratio == pytest.approx(7 / 7.5)
    with pytest.raises(ValueError):
        cubic_monotonicity_check(np.zeros((2, 3)), np.zeros((3, 3)))


def test_stress_identity_residual_decreases():
    f = lambda X, Y: np.stack([np.cos(np.pi * X), np.cos(np.pi * Y), np.ones_like(X)], -1)
    r16, r32 = stress_identity_residual(f, 16), stress_identity_residual(f, 32)
    assert r32 < 0.3 * r16

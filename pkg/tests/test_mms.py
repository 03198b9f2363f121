import numpy as np
import pytest

from magvisc.grid import CouplingFlags, GridSpec, SimParams
from magvisc.mms import ManufacturedSolution, solve_manufactured, spatial_convergence, temporal_convergence
from magvisc.ops import divergence


def test_initial_state_matches_exact_fields():
    ms = ManufacturedSolution(GridSpec(2, 16), SimParams())
    s = ms.initial_state()
    err = ms.error(s)
    assert err["F"] == 0.0 and err["M"] == 0.0
    assert err["v"] < 1e-2            # stream-function velocity vs point samples
    assert np.abs(divergence(s.v, ms.grid)).max() < 1e-12


def test_source_is_finite_with_expected_shapes():
    g = GridSpec(2, 8)
    src = ManufacturedSolution(g, SimParams(), "oscillating").source(0.3)
    assert src["v"][0].shape == (7, 8) and src["v"][1].shape == (8, 7)
    assert src["F"].shape == (8, 8, 2, 2) and src["M"].shape == (8, 8, 3)
    assert all(np.all(np.isfinite(a)) for a in (*src["v"], src["F"], src["M"]))


@pytest.mark.parametrize("kwargs", [dict(h_ext=(1.0, 0.0, 0.0)), dict(f_boundary="identity"),
                                    dict(coupling=CouplingFlags(advection=False))])
def test_unsupported_settings_rejected(kwargs):
    with pytest.raises(ValueError):
        ManufacturedSolution(GridSpec(2, 8), SimParams(**kwargs))
    with pytest.raises(ValueError):
        ManufacturedSolution(GridSpec(3, 8), SimParams())
    with pytest.raises(ValueError):
        ManufacturedSolution(GridSpec(2, 8), SimParams(), "cubic")


def test_linear_profile_error_depends_weakly_on_dt():
    # the truncation error has no time component, so dt only changes how
    # the spatial error is propagated
    p1, p2 = SimParams(dt=0.01, t_end=0.02), SimParams(dt=0.005, t_end=0.02)
    e1 = solve_manufactured(16, p1)
    e2 = solve_manufactured(16, p2)
    a, b = e1[1].error(e1[0])["total"], e2[1].error(e2[0])["total"]
    assert a == pytest.approx(b, rel=0.2)


def test_small_convergence_studies():
    sp = spatial_convergence((16, 32), SimParams(dt=5e-3, t_end=0.01))
    assert sp.fitted_order > 1.8
    tm = temporal_convergence(16, (0.04, 0.02, 0.01), 0.08)
    assert tm.min_order > 0.8

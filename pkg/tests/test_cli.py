import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magvisc.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, EXIT_SOLVER, dispatch, main
from magvisc.config import build_config, load_config, parse_config
from magvisc.grid import ConfigError, GridSpec, InitialConditionSpec, make_state
from magvisc.output import dump_fields, load_fields, read_csv, write_csv

SIM = {"grid": {"cells": 8}, "params": {"dt": 0.005, "t_end": 0.02}, "ic": {"preset": "vortex"},
       "outputs": {"cadence": 2}}


def _write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return path


def test_defaults_filled():
    cfg = build_config({"grid": {"cells": 16}})
    p = cfg.params
    assert (p.nu, p.kappa, p.mu, p.h_ext) == (1.0, 1.0, 1.0, (0.0, 0.0, 0.0))
    # rest state: dt = 0.5 * cfl_limit * h / 1
    assert p.dt == pytest.approx(0.5 * 0.5 / 16)
    assert cfg.experiment == "simulate" and cfg.grid.dim == 2
    assert cfg.document["params"]["dt"] == p.dt


def test_invalid_value_names_the_field():
    with pytest.raises(ConfigError, match="nu"):
        build_config({"grid": {"cells": 8}, "params": {"nu": -1}})


def test_parse_error_reports_position():
    with pytest.raises(ConfigError, match="line 2 column"):
        parse_config('{"grid":\n {"cells": 8,}}')


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="grid"):
        build_config({"grid": {"cells": 8, "walls": "slip"}})
    with pytest.raises(ConfigError):
        build_config({"grid": {"cells": 8}, "extra": 1})


def test_twin_3d_requires_s_above_three():
    with pytest.raises(ConfigError, match="s > 3"):
        build_config({"experiment": "twin", "grid": {"cells": 8, "dim": 3}, "twin": {"s": 3}})
    assert build_config({"experiment": "twin", "grid": {"cells": 8, "dim": 2}, "twin": {"s": 3}})


def test_kappa_zero_needs_audit_mode():
    with pytest.raises(ConfigError, match="kappa"):
        build_config({"grid": {"cells": 8}, "params": {"kappa": 0}})


def test_overrides_and_consistency_checks():
    cfg = build_config(dict(SIM), seed=9, dims=3)
    assert cfg.grid.dim == 3 and cfg.seed == 9 and cfg.ic.params["seed"] == 9
    with pytest.raises(ConfigError, match="dim"):
        build_config({"grid": {"cells": [8, 8]}}, dims=3)
    with pytest.raises(ConfigError, match="experiment"):
        build_config({"experiment": "twin", "grid": {"cells": 8}}, experiment="audit")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/run.json")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 64 - 1))
def test_hash_depends_on_seed_and_is_stable(seed):
    a = build_config(dict(SIM), seed=seed)
    b = build_config(json.loads(json.dumps(SIM)), seed=seed)
    assert a.hash == b.hash and len(a.hash) == 16
    other = (seed + 1) % 2 ** 64
    assert build_config(dict(SIM), seed=other).hash != a.hash


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.1], [2, np.float64(1 / 3)]], "abc", {"note": "x"})
    meta, cols, data = read_csv(path)
    assert meta == {"config_hash": "abc", "note": "x"} and cols == ["a", "b"]
    assert data[1, 1] == 1 / 3


def test_field_dump_round_trip(tmp_path):
    s = make_state(GridSpec(2, (6, 4)), InitialConditionSpec("random-smooth"))
    _, hdr = dump_fields(s, tmp_path, "s0", "abc")
    out = load_fields(hdr)
    assert out["header"]["config_hash"] == "abc" and out["header"]["spacing"] == [1 / 6, 1 / 4]
    np.testing.assert_array_equal(out["M"], s.interior("M"))
    np.testing.assert_array_equal(out["v1"], s.velocity_unknowns()[1])


def test_simulate_end_to_end_is_reproducible(tmp_path):
    doc = dict(SIM, outputs={"cadence": 2, "field_dump": True})
    cfg = _write(tmp_path, doc)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b")]) == EXIT_OK
    for f in (tmp_path / "a").rglob("*"):
        if f.is_file():
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()
    meta, cols, data = read_csv(tmp_path / "a" / "ledger.csv")
    assert meta["config_hash"] == load_config(cfg).hash
    assert cols[0] == "t" and cols[-2:] == ["slack", "psi"]
    np.testing.assert_allclose(data[:, 0], [0.0, 0.01, 0.02])
    assert len(list((tmp_path / "a" / "fields").glob("*.hdr"))) == 3


def test_config_error_exit_code_and_record(tmp_path):
    cfg = _write(tmp_path, {"grid": {"cells": 8}, "params": {"nu": -1}})
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG
    rec = json.loads((out / "failure.json").read_text())
    assert rec["status"] == "config" and "nu" in rec["message"]


def test_solver_failure_exit_code(tmp_path):
    doc = {"grid": {"cells": 8}, "params": {"dt": 0.1, "t_end": 0.5},
           "ic": {"preset": "vortex", "params": {"amplitude": 100.0}}}
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(_write(tmp_path, doc)), "--out", str(out)]) == EXIT_SOLVER
    assert json.loads((out / "failure.json").read_text())["error"] == "CFLError"
    assert (out / "ledger.csv").exists()


def test_verdict_fail_exit_code(tmp_path):
    # listing the larger basis first makes the m-convergence check fail
    doc = {"grid": {"cells": 8}, "galerkin": {"modes": [4, 2], "n_grid": 16, "dt": 2e-3, "t_end": 0.01}}
    assert main(["galerkin", "--config", str(_write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == EXIT_FAIL
    meta, _, _ = read_csv(tmp_path / "o" / "summary.csv")
    assert meta["verdict"] == "FAIL"


def test_twin_and_audit_dispatch(tmp_path):
    cfg = build_config({"grid": {"cells": 8}, "params": {"dt": 0.005, "t_end": 0.01}, "ic": {"preset": "vortex"},
                        "twin": {"deltas": [0.0, 1e-4, 1e-5]}}, experiment="twin")
    assert dispatch(cfg, tmp_path / "t") == EXIT_OK
    _, cols, data = read_csv(tmp_path / "t" / "twin.csv")
    assert cols == ["delta", "ratio", "identical", "C_fit", "C_bound"] and data[0, 2] == 1
    cfg = build_config({"grid": {"cells": 16}, "audit": {"samples": 3, "cells": 16, "pairs": 1000}},
                       experiment="audit")
    assert dispatch(cfg, tmp_path / "a") == EXIT_OK
    _, cols, _ = read_csv(tmp_path / "a" / "audit_ladyzhenskaya.csv")
    assert cols == ["sample_id", "ratio", "refinement_stable", "degenerate"]


def test_convergence_rejects_3d(tmp_path):
    cfg = build_config({"grid": {"cells": 8, "dim": 3}}, experiment="convergence")
    assert dispatch(cfg, tmp_path) == EXIT_CONFIG

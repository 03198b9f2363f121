"""Command-line driver: ``magvisc <verb> --config run.json [--out DIR]``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 verdict FAIL.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, RunConfig, load_config
from .grid import ConfigError, GridSpec, make_state
from .output import dump_fields, write_csv
from .solver import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_FAIL = 0, 2, 3, 4


def _write_failure(out: Path, kind: str, err: Exception, config_hash: str | None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    record = {"status": kind, "error": type(err).__name__, "message": str(err), "config_hash": config_hash}
    (out / "failure.json").write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")


def _summary(out: Path, cfg: RunConfig, rows: list, verdict: bool) -> None:
    write_csv(out / "summary.csv", ["check", "value", "target", "pass"], rows, cfg.hash,
              {"experiment": cfg.experiment, "verdict": "PASS" if verdict else "FAIL"})


def _prodi_serrin_csv(out: Path, cfg: RunConfig, states, s: float) -> None:
    from .diagnostics import prodi_serrin_monitor

    log = prodi_serrin_monitor(states, s)
    write_csv(out / "prodi_serrin.csv", log.COLUMNS, log.rows(), cfg.hash, {"s": s, "r": log.r})


# --------------------------------------------------------------------------
# experiments

def _simulate(cfg: RunConfig, out: Path) -> int:
    from .diagnostics import LEDGER_COLUMNS
    from .solver import run

    state0 = make_state(cfg.grid, cfg.ic, cfg.params.f_boundary)
    count = [0]

    def ledger_hook(t, state, ledger):
        if cfg.outputs.field_dump:
            dump_fields(state, out / "fields", f"state_{count[0]:05d}", cfg.hash)
        count[0] += 1
        return ledger.row()

    keep = cfg.grid.dim == 3
    try:
        traj = run(state0, cfg.params, [ledger_hook], cfg.outputs.cadence, keep_states=keep)
        error = None
    except SolverError as err:
        traj, error = err.trajectory, err
    write_csv(out / "ledger.csv", LEDGER_COLUMNS, traj.records, cfg.hash)
    write_csv(out / "steps.csv", ["t", "cfl", "poisson_iters", "coupling_iters", "divergence"],
              ([r.time, r.cfl, r.poisson_iters, r.coupling_iters, r.residuals.get("divergence", np.nan)]
               for r in traj.reports), cfg.hash)
    if keep and traj.states:
        _prodi_serrin_csv(out, cfg, traj.states, 4.0)
    if error is not None:
        _write_failure(out, "solver", error, cfg.hash)
        return EXIT_SOLVER
    slack = min(row[-2] for row in traj.records)
    _summary(out, cfg, [["min_slack", slack, 0.0, True], ["steps", traj.steps, "", True]], True)
    return EXIT_OK


def _twin(cfg: RunConfig, out: Path) -> int:
    from .diagnostics import GRONWALL_COLUMNS, run_twin_experiment

    o = cfg.options
    state0 = make_state(cfg.grid, cfg.ic, cfg.params.f_boundary)
    exp = run_twin_experiment(state0, cfg.params, o["deltas"], o["fields"], cfg.seed, cfg.outputs.cadence,
                              s=o["s"], spread=o["spread"], keep_states=cfg.grid.dim == 3)
    for i, r in enumerate(exp.runs):
        write_csv(out / f"gronwall_{i}.csv", GRONWALL_COLUMNS, (rec.row() for rec in r.records), cfg.hash,
                  {"delta": repr(r.delta)})
    write_csv(out / "twin.csv", ["delta", "ratio", "identical", "C_fit", "C_bound"],
              ([r.delta, r.ratio, r.identical, r.constants["C_fit"], r.constants["C_bound"]] for r in exp.runs),
              cfg.hash, {"verdict": "PASS" if exp.verdict else "FAIL", "reasons": "; ".join(exp.reasons)})
    if cfg.grid.dim == 3 and exp.runs[0].states:
        _prodi_serrin_csv(out, cfg, exp.runs[0].states, o["s"])
    rows = [[f"ratio_delta_{r.delta:g}", r.ratio, f"within factor {o['spread']}", exp.verdict] for r in exp.runs]
    _summary(out, cfg, rows, exp.verdict)
    return EXIT_OK if exp.verdict else EXIT_FAIL


def _audit(cfg: RunConfig, out: Path) -> int:
    from .diagnostics import cubic_monotonicity_check
    from .norms import (audit_elliptic_regularity, audit_interp3d, audit_ladyzhenskaya, elliptic_ratio,
                        ladyzhenskaya_ratio, random_dirichlet_fields)

    o = cfg.options
    n = o["cells"]
    g2 = GridSpec(2, n)
    header = [f"config_hash: {cfg.hash}"]
    lady = audit_ladyzhenskaya(random_dirichlet_fields(o["samples"], 2, cfg.seed), g2)
    lady.to_csv(out / "audit_ladyzhenskaya.csv", header)
    X, Y = g2.cell_coords()
    sin_ratio = ladyzhenskaya_ratio(np.sin(np.pi * X) * np.sin(np.pi * Y), g2)[0]
    ell = audit_elliptic_regularity([lambda X, Y: np.cos(np.pi * X)], g2)
    ell.to_csv(out / "audit_elliptic.csv", header)
    rng = np.random.default_rng(cfg.seed)
    cubic = cubic_monotonicity_check(rng.standard_normal((o["pairs"], 3)), rng.standard_normal((o["pairs"], 3)))
    target = np.pi ** 2 / (1 + np.pi ** 2)
    rows = [
        ["ladyzhenskaya_max", lady.max_ratio, "<= 0.5", lady.max_ratio <= 0.5 and lady.all_stable],
        ["ladyzhenskaya_sinsin", sin_ratio, "0.3376 +- 2e-3", abs(sin_ratio - 0.3376) <= 2e-3],
        ["elliptic_cos", ell.ratios[0], f"{target:.6f} +- 1e-2", abs(ell.ratios[0] - target) <= 1e-2],
        ["cubic_violations", cubic.monotone_violations.size + cubic.bound_violations.size, "0", cubic.passed],
    ]
    if cfg.grid.dim == 3:
        n3 = max(8, n // 4)
        g3 = GridSpec(3, n3)
        rep = audit_interp3d(random_dirichlet_fields(min(o["samples"], 20), 3, cfg.seed), g3, o["s"])
        rep.to_csv(out / "audit_interp3d.csv", header)
        rows.append([f"interp3d_s{o['s']:g}_max", rep.max_ratio, "finite, refinement-stable",
                     bool(np.isfinite(rep.max_ratio) and rep.all_stable)])
    verdict = all(bool(r[-1]) for r in rows)
    _summary(out, cfg, rows, verdict)
    return EXIT_OK if verdict else EXIT_FAIL


def _galerkin(cfg: RunConfig, out: Path) -> int:
    from .galerkin import (GalerkinEnergyReport, GalerkinParams, galerkin_csv_rows, galerkin_energy_check,
                           modal_difference_norm, run_galerkin, skew_defect)

    o, p = cfg.options, cfg.params
    prm = GalerkinParams(p.nu, max(p.kappa, 1e-300), p.mu, o["dt"], o["t_end"], o["n_grid"])
    ms = sorted(set(o["modes"]) | {2 * m for m in o["modes"]})
    trajs, rows, ok = {}, [], True
    for m in ms:
        traj = run_galerkin(m, prm)
        rep = galerkin_energy_check(traj)
        trajs[m] = traj
        write_csv(out / f"galerkin_m{m}.csv", GalerkinEnergyReport.COLUMNS, galerkin_csv_rows(traj, rep), cfg.hash,
                  {"modes": m})
        rows.append([f"energy_violation_m{m}", rep.max_violation, "0", rep.max_violation == 0.0])
    from .galerkin import assemble_basis, assemble_convection_tensor
    skew = skew_defect(assemble_convection_tensor(assemble_basis(max(ms))))
    rows.append([f"skew_defect_m{max(ms)}", skew, "<= 1e-13", skew <= 1e-13])
    diffs = [modal_difference_norm(trajs[m], trajs[2 * m]) for m in o["modes"]]
    write_csv(out / "galerkin_convergence.csv", ["m", "diff_m_2m"], zip(o["modes"], diffs), cfg.hash)
    decreasing = bool(np.all(np.diff(diffs) < 0))
    rows.append(["m_convergence_decreasing", diffs[-1], "decreasing", decreasing])
    ok = all(bool(r[-1]) for r in rows)
    _summary(out, cfg, rows, ok)
    return EXIT_OK if ok else EXIT_FAIL


def _convergence(cfg: RunConfig, out: Path) -> int:
    from .mms import spatial_convergence, temporal_convergence

    o = cfg.options
    if cfg.grid.dim != 2:
        raise ConfigError("grid.dim: the convergence study is planar")
    base = replace(cfg.params, h_ext=(0.0, 0.0, 0.0))
    sp = spatial_convergence(tuple(o["levels"]), replace(base, dt=o["space_dt"], t_end=o["space_t_end"]))
    tm = temporal_convergence(o["time_cells"], tuple(o["dts"]), o["t_end"], base)
    for name, res in (("space", sp), ("time", tm)):
        orders = [np.nan, *res.orders]
        write_csv(out / f"convergence_{name}.csv", [res.parameter, "error", "order"],
                  zip(res.values, res.errors, orders), cfg.hash)
    rows = [["spatial_order", sp.min_order, ">= 1.9", sp.min_order >= 1.9],
            ["temporal_order", tm.min_order, ">= 0.9", tm.min_order >= 0.9]]
    ok = all(r[-1] for r in rows)
    _summary(out, cfg, rows, ok)
    return EXIT_OK if ok else EXIT_FAIL


RUNNERS = {"simulate": _simulate, "twin": _twin, "audit": _audit, "galerkin": _galerkin,
           "convergence": _convergence}


def dispatch(cfg: RunConfig, out: str | Path | None = None) -> int:
    """Run the configured experiment, write its artifacts and return the exit code."""
    out = Path(out or cfg.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.document, indent=1, sort_keys=True) + "\n")
    try:
        return RUNNERS[cfg.experiment](cfg, out)
    except ConfigError as err:
        _write_failure(out, "config", err, cfg.hash)
        return EXIT_CONFIG
    except SolverError as err:
        _write_failure(out, "solver", err, cfg.hash)
        return EXIT_SOLVER


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magvisc", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides outputs.directory)")
    ap.add_argument("--seed", type=_u64, help="random seed (overrides the config)")
    ap.add_argument("--dims", type=int, choices=(2, 3), help="spatial dimension (overrides grid.dim)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, dims=args.dims, experiment=args.verb)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        if args.out:
            _write_failure(Path(args.out), "config", err, None)
        return EXIT_CONFIG
    code = dispatch(cfg, args.out)
    print(f"{cfg.experiment}: exit {code} ({cfg.hash})")
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Magneto-viscoelastic fluid solvers and diagnostics.

A MAC finite-difference solver for incompressible flow coupled to a
transported deformation gradient and a Ginzburg-Landau magnetisation,
together with energy ledgers, twin-run stability experiments, functional
inequality audits and a spectral Galerkin reproducer.
"""
from .config import RunConfig, load_config, parse_config
from .diagnostics import (EnergyLedger, run_twin_experiment, prodi_serrin_monitor, stress_identity_audit,
                          total_energy, helmholtz_energy)
from .grid import (ConfigError, CouplingFlags, FieldState, GridSpec, InitialConditionSpec, SimParams,
                   make_state)
from .solver import CFLError, SolverError, Trajectory, advance, run

__version__ = "0.1.0"

__all__ = [
    "CFLError", "ConfigError", "CouplingFlags", "EnergyLedger", "FieldState", "GridSpec", "InitialConditionSpec",
    "RunConfig", "SimParams", "SolverError", "Trajectory", "advance", "helmholtz_energy", "load_config",
    "make_state", "parse_config", "prodi_serrin_monitor", "run", "run_twin_experiment", "stress_identity_audit",
    "total_energy",
]

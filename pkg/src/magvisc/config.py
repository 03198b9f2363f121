"""JSON run configuration: schema validation, defaults and hashing."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .grid import (CouplingFlags, ConfigError, GridSpec, InitialConditionSpec, PRESETS, SimParams)

EXPERIMENTS = ("simulate", "twin", "audit", "galerkin", "convergence")

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM_LIST = {"type": "array", "items": _POS, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["grid"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "grid": {
            "type": "object", "additionalProperties": False, "required": ["cells"],
            "properties": {
                "dim": {"enum": [2, 3]},
                "cells": {"oneOf": [{"type": "integer", "minimum": 4},
                                    {"type": "array", "items": {"type": "integer", "minimum": 4},
                                     "minItems": 2, "maxItems": 3}]},
                "extent": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 3},
            },
        },
        "params": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "nu": _POS, "kappa": {"type": "number", "minimum": 0}, "mu": _POS, "dt": _POS, "t_end": _POS,
                "h_ext": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                "coupling": {
                    "type": "object", "additionalProperties": False,
                    "properties": {k: {"type": "boolean"} for k in CouplingFlags.__dataclass_fields__},
                },
                "f_boundary": {"enum": ["zero", "identity"]},
                "advection_scheme": {"enum": ["centered", "upwind"]},
                "projection": {"enum": ["stokes", "chorin"]},
                "cfl_limit": _POS, "tol": _POS,
                "coupling_iterations": {"type": "integer", "minimum": 1},
                "coupling_tol": _POS,
                "audit_mode": {"type": "boolean"},
            },
        },
        "ic": {
            "type": "object", "additionalProperties": False, "required": ["preset"],
            "properties": {"preset": {"enum": list(PRESETS)}, "params": {"type": "object"}},
        },
        "outputs": {
            "type": "object", "additionalProperties": False,
            "properties": {"cadence": {"type": "integer", "minimum": 1}, "directory": {"type": "string"},
                           "field_dump": {"type": "boolean"}},
        },
        "twin": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "deltas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "fields": {"type": "array", "items": {"enum": ["v", "F", "M"]}, "minItems": 1},
                "s": {"type": "number"},
                "spread": {"type": "number", "exclusiveMinimum": 1},
            },
        },
        "audit": {
            "type": "object", "additionalProperties": False,
            "properties": {"samples": {"type": "integer", "minimum": 1}, "cells": {"type": "integer", "minimum": 4},
                           "s": {"type": "number"}, "pairs": {"type": "integer", "minimum": 1}},
        },
        "galerkin": {
            "type": "object", "additionalProperties": False,
            "properties": {"modes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                           "n_grid": {"type": "integer", "minimum": 4}, "dt": _POS, "t_end": _POS},
        },
        "convergence": {
            "type": "object", "additionalProperties": False,
            "properties": {"levels": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 2},
                           "dts": {**_NUM_LIST, "minItems": 3}, "t_end": _POS,
                           "time_cells": {"type": "integer", "minimum": 4}, "space_dt": _POS, "space_t_end": _POS},
        },
    },
}

DEFAULT_OPTIONS = {
    "twin": {"deltas": [0.0, 1e-4, 1e-5, 1e-6], "fields": ["v", "F", "M"], "s": 4.0, "spread": 2.0},
    "audit": {"samples": 100, "cells": 64, "s": 4.0, "pairs": 1_000_000},
    "galerkin": {"modes": [4, 8, 16], "n_grid": 32, "dt": 1e-3, "t_end": 0.05},
    "convergence": {"levels": [32, 64, 128], "dts": [0.02, 0.01, 0.005, 0.0025], "t_end": 0.2, "time_cells": 32,
                    "space_dt": 2.5e-3, "space_t_end": 0.05},
}


@dataclass(frozen=True)
class OutputSpec:
    cadence: int = 5
    directory: str = "out"
    field_dump: bool = False


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    grid: GridSpec
    params: SimParams
    ic: InitialConditionSpec
    outputs: OutputSpec
    options: dict = field(default_factory=dict)
    seed: int = 12345
    document: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        """SHA-256 (first 16 hex digits) of the canonical, defaults-filled document."""
        blob = json.dumps(self.document, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _where(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    return path or "<root>"


def _cfl_dt(grid: GridSpec, params: dict, ic: InitialConditionSpec) -> float:
    """Step from the advective limit with a safety factor of one half,
    using the initial speed (at least one); audit mode adds the diffusive limit."""
    from .grid import make_state
    from .solver import max_speed

    state = make_state(grid, ic, params.get("f_boundary", "zero"))
    h = min(grid.spacing)
    dt = 0.5 * params.get("cfl_limit", 0.5) * h / max(max_speed(state), 1.0)
    if params.get("audit_mode", False):
        dt = min(dt, 0.2 * h ** 2 / max(params.get("nu", 1.0), params.get("kappa", 1.0), 1.0))
    return float(dt)


def build_config(doc: dict, seed: int | None = None, dims: int | None = None,
                 experiment: str | None = None) -> RunConfig:
    """Validate a parsed document and fill defaults; CLI overrides win.
    ``experiment`` (the CLI verb) must agree with the document if both are set."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"invalid config at {_where(e)}: {e.message}")
    doc = json.loads(json.dumps(doc))
    if experiment is not None:
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}")
        if doc.get("experiment", experiment) != experiment:
            raise ConfigError(f"experiment: config names {doc['experiment']!r} but {experiment!r} was requested")
    experiment = experiment or doc.get("experiment", "simulate")
    g = doc["grid"]
    dim = dims or g.get("dim", len(g["cells"]) if isinstance(g["cells"], list) else 2)
    cells = g["cells"]
    if isinstance(cells, list) and len(cells) != dim:
        raise ConfigError(f"grid.cells has {len(cells)} entries but dim is {dim}")
    extent = g.get("extent", [1.0] * dim)
    if len(extent) != dim:
        raise ConfigError(f"grid.extent has {len(extent)} entries but dim is {dim}")
    grid = GridSpec(dim, tuple(cells) if isinstance(cells, list) else cells, tuple(extent))

    seed = doc.get("seed", 12345) if seed is None else seed
    ic_doc = doc.get("ic", {"preset": "rest"})
    ic_params = dict(ic_doc.get("params", {}))
    ic_params.setdefault("seed", seed)
    ic = InitialConditionSpec(ic_doc["preset"], ic_params)

    p = dict(doc.get("params", {}))
    for name in ("nu", "kappa", "mu"):
        p.setdefault(name, 1.0)
    p.setdefault("h_ext", [0.0, 0.0, 0.0])
    if p["kappa"] == 0 and not p.get("audit_mode", False):
        raise ConfigError("params.kappa: must be strictly positive outside audit mode")
    if "dt" not in p:
        p["dt"] = _cfl_dt(grid, p, ic)
    p.setdefault("t_end", 0.1)
    coupling = CouplingFlags(**p.get("coupling", {}))
    kwargs = {k: v for k, v in p.items() if k != "coupling"}
    kwargs["h_ext"] = tuple(kwargs["h_ext"])
    params = SimParams(coupling=coupling, **kwargs)

    outputs = OutputSpec(**doc.get("outputs", {}))
    options = {}
    if experiment in DEFAULT_OPTIONS:
        options = {**DEFAULT_OPTIONS[experiment], **doc.get(experiment, {})}
    if experiment == "twin" and dim == 3 and not options["s"] > 3:
        raise ConfigError(f"twin.s = {options['s']}: the Prodi-Serrin exponent requires s > 3")
    if experiment == "audit" and not options["s"] > 3:
        raise ConfigError(f"audit.s = {options['s']}: the interpolation audit requires s > 3")

    full = {
        "experiment": experiment, "seed": seed,
        "grid": {"dim": dim, "cells": list(grid.cells), "extent": list(grid.extent)},
        "params": {**{k: (list(v) if isinstance(v, tuple) else v) for k, v in kwargs.items()},
                   "coupling": dict(coupling.__dict__)},
        "ic": {"preset": ic.preset, "params": ic_params},
        "outputs": dict(outputs.__dict__),
    }
    if options:
        full[experiment] = options
    return RunConfig(experiment, grid, params, ic, outputs, options, seed, full)


def parse_config(text: str, seed: int | None = None, dims: int | None = None,
                 experiment: str | None = None) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"parse error at line {err.lineno} column {err.colno}: {err.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return build_config(doc, seed, dims, experiment)


def load_config(path, seed: int | None = None, dims: int | None = None,
                experiment: str | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    return parse_config(text, seed, dims, experiment)

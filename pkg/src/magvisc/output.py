"""Output writers: hash-stamped CSV tables and raw binary field dumps."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import FieldState


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], config_hash: str,
              meta: dict | None = None) -> Path:
    """CSV with ``# key: value`` header lines naming the config hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash: {config_hash}\n")
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of :func:`write_csv`: (meta, columns, data).  ``data`` is a
    float array for numeric tables and an array of strings otherwise."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    body = np.array(rows[1:], dtype=str).reshape(-1, len(rows[0]))
    try:
        return meta, rows[0], body.astype(float)
    except ValueError:
        return meta, rows[0], body


def dump_fields(state: FieldState, directory, stem: str, config_hash: str) -> tuple[Path, Path]:
    """Raw little-endian float64 interior arrays (v components, p, F, M in
    that order) plus a JSON text header describing the layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    g = state.grid
    blocks = [("v%d" % k, u) for k, u in enumerate(state.velocity_unknowns())]
    blocks += [("p", state.interior("p")), ("F", state.interior("F")), ("M", state.interior("M"))]
    bin_path, hdr_path = directory / f"{stem}.bin", directory / f"{stem}.hdr"
    offset, layout = 0, []
    with open(bin_path, "wb") as fh:
        for name, arr in blocks:
            a = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(a.tobytes())
            layout.append({"name": name, "shape": list(a.shape), "offset": offset})
            offset += a.nbytes
    header = {"config_hash": config_hash, "time": state.time, "dim": g.dim, "cells": list(g.cells),
              "extent": list(g.extent), "spacing": list(g.spacing), "dtype": "<f8", "order": "C",
              "blocks": layout}
    hdr_path.write_text(json.dumps(header, indent=1) + "\n")
    return bin_path, hdr_path


def load_fields(hdr_path) -> dict:
    """Read a dump written by :func:`dump_fields` into a name -> array dict."""
    hdr_path = Path(hdr_path)
    header = json.loads(hdr_path.read_text())
    raw = hdr_path.with_suffix(".bin").read_bytes()
    out = {"header": header}
    for b in header["blocks"]:
        n = int(np.prod(b["shape"]))
        out[b["name"]] = np.frombuffer(raw, dtype="<f8", count=n, offset=b["offset"]).reshape(b["shape"])
    return out

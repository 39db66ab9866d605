"""Binary grid files.

A grid file is a raw little-endian row-major array next to a JSON sidecar
``<path>.json`` holding {"d", "points", "lo", "hi", "dtype"}.  dtype "c128"
stores interleaved real/imaginary float64 pairs, "u8" stores one byte per cell
(domain masks).  State files add "N" and "layout": "full" stores the tensor
over all N*d coordinates, "product" stores the N one-body factors in order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ltlab.grid_core import BoxSpec, DomainMask, GridFunction

_DTYPES = {"c128": np.dtype("<c16"), "u8": np.dtype("u1")}


def sidecar(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def _write(path, arr, meta):
    arr = np.ascontiguousarray(arr, dtype=_DTYPES[meta["dtype"]])
    Path(path).write_bytes(arr.tobytes(order="C"))
    sidecar(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def _box_meta(box: BoxSpec, dtype: str) -> dict:
    return {"d": box.d, "points": list(box.points), "lo": list(box.lo), "hi": list(box.hi),
            "dtype": dtype}


def read_meta(path) -> dict:
    try:
        meta = json.loads(sidecar(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed sidecar for {path}: {exc}") from None
    for k in ("d", "points", "lo", "hi", "dtype"):
        if k not in meta:
            raise ValueError(f"sidecar for {path} lacks '{k}'")
    if meta["dtype"] not in _DTYPES:
        raise ValueError(f"unknown dtype {meta['dtype']!r}")
    return meta


def _read(path, meta, count):
    raw = Path(path).read_bytes()
    dt = _DTYPES[meta["dtype"]]
    if len(raw) != count * dt.itemsize:
        raise ValueError(f"{path}: expected {count * dt.itemsize} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=dt).copy()


def _box_of(meta) -> BoxSpec:
    return BoxSpec(int(meta["d"]), tuple(meta["lo"]), tuple(meta["hi"]), tuple(meta["points"]))


def save_grid(path, u: GridFunction):
    _write(path, np.asarray(u.values, complex), _box_meta(u.box, "c128"))


def load_grid(path) -> GridFunction:
    meta = read_meta(path)
    if meta["dtype"] != "c128" or "N" in meta:
        raise ValueError(f"{path} is not a one-body grid function")
    box = _box_of(meta)
    vals = _read(path, meta, box.size).reshape(box.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{path} holds non-finite values")
    if not np.any(vals.imag):
        vals = vals.real.copy()
    return GridFunction(box, vals)


def save_mask(path, m: DomainMask):
    _write(path, np.asarray(m.mask, np.uint8), _box_meta(m.box, "u8"))


def load_mask(path) -> DomainMask:
    meta = read_meta(path)
    if meta["dtype"] != "u8":
        raise ValueError(f"{path} is not a mask file")
    box = _box_of(meta)
    return DomainMask(box, _read(path, meta, box.size).reshape(box.shape).astype(bool))


def save_state(path, state):
    meta = _box_meta(state.box, "c128")
    meta["N"] = state.N
    if state.is_product:
        meta["layout"] = "product"
        arr = np.stack([np.asarray(f, complex) for f in state.factors])
    else:
        meta["layout"] = "full"
        arr = np.asarray(state.values, complex)
    _write(path, arr, meta)


def load_state(path):
    from ltlab.nbody import NBodyState

    meta = read_meta(path)
    if "N" not in meta:
        raise ValueError(f"{path} is not a state file")
    box, N = _box_of(meta), int(meta["N"])
    layout = meta.get("layout", "full")
    if layout == "product":
        vals = _read(path, meta, N * box.size).reshape((N,) + box.shape)
        fs = [v.real.copy() if not np.any(v.imag) else v for v in vals]
        return NBodyState(N, box, factors=fs)
    vals = _read(path, meta, box.size**N).reshape(box.shape * N)
    if not np.any(vals.imag):
        vals = vals.real.copy()
    return NBodyState(N, box, values=vals)


def load_density_or_state(path):
    """(state or None, density) from either kind of file."""
    from ltlab.nbody import density

    meta = read_meta(path)
    if "N" in meta:
        st = load_state(path)
        return st, density(st)
    return None, load_grid(path)

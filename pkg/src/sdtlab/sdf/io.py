"""JSON round-trip for every field type."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import nnet
from .compose import Translated, Union
from .learned import BernsteinSdf, MlpSdf
from .primitives import Arc, Box, Capsule, Circle, HalfPlane, SdfField, Triangle

FORMAT_VERSION = 1
_PRIMS = {"circle": Circle, "box": Box, "triangle": Triangle, "arc": Arc, "capsule": Capsule,
          "half_plane": HalfPlane}


def _plain(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_plain(u) for u in v]
    return float(v)


def field_to_dict(f: SdfField) -> dict:
    for kind, cls in _PRIMS.items():
        if type(f) is cls:
            params = {k: _plain(getattr(f, k)) for k in cls.__dataclass_fields__ if k != "dim"}
            return {"format_version": FORMAT_VERSION, "kind": kind, **params}
    if isinstance(f, Union):
        return {"format_version": FORMAT_VERSION, "kind": "union", "fields": [field_to_dict(c) for c in f.fields]}
    if isinstance(f, Translated):
        return {"format_version": FORMAT_VERSION, "kind": "translated", "offset": _plain(f.offset),
                "field": field_to_dict(f.field)}
    if isinstance(f, MlpSdf):
        return {**nnet.mlp_to_dict(f.mlp), "kind": "mlp_sdf", "center": _plain(f.center), "scale": float(f.scale)}
    if isinstance(f, BernsteinSdf):
        return {"format_version": FORMAT_VERSION, "kind": "bernstein", "degree": f.degree, "dim": f.dim,
                "lo": _plain(f.lo), "hi": _plain(f.hi), "coeffs": f.coeffs.ravel().tolist()}
    raise TypeError(f"cannot serialise {type(f).__name__}")


def _tuplify(v):
    return tuple(_tuplify(u) for u in v) if isinstance(v, list) else v


def field_from_dict(d: dict) -> SdfField:
    if d.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported field format {d.get('format_version')}")
    kind = d.get("kind")
    if kind in _PRIMS:
        cls = _PRIMS[kind]
        return cls(**{k: _tuplify(d[k]) for k in cls.__dataclass_fields__ if k in d and k != "dim"})
    if kind == "union":
        return Union(tuple(field_from_dict(c) for c in d["fields"]))
    if kind == "translated":
        return Translated(field_from_dict(d["field"]), tuple(d["offset"]))
    if kind == "mlp_sdf":
        return MlpSdf(nnet.mlp_from_dict(d), tuple(d["center"]), float(d["scale"]))
    if kind == "bernstein":
        shape = (int(d["degree"]) + 1,) * int(d["dim"])
        return BernsteinSdf(np.array(d["coeffs"], dtype=float).reshape(shape), tuple(d["lo"]), tuple(d["hi"]))
    raise ValueError(f"unknown field kind {kind!r}")


def save_field(f: SdfField, path) -> None:
    Path(path).write_text(json.dumps(field_to_dict(f)))


def load_field(path) -> SdfField:
    return field_from_dict(json.loads(Path(path).read_text()))

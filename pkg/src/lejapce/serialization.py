"""JSON persistence of surrogates.

Two layouts share ``{"format": 1, "basis": ...}``:

``newton-hier``
    distributions, per-dimension node lists, growth-ordered multi-indices,
    surpluses, model values and the active set.
``orthonormal-pce``
    distributions, recurrence tables, node lists, multi-indices,
    coefficients, model values and diagnostics.

Floats are written with ``repr`` precision, so a reload evaluates bitwise
identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .distributions import ProductDistribution
from .exceptions import ConfigurationError
from .hierarchical import HierSurrogate
from .orthopoly import RecurrenceTable
from .pce import PceSurrogate

FORMAT_VERSION = 1


def _indices(items):
    return [tuple(int(v) for v in i) for i in items]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def surrogate_to_dict(s) -> dict:
    """Plain-JSON form of a :class:`HierSurrogate` or :class:`PceSurrogate`."""
    if not isinstance(s, (HierSurrogate, PceSurrogate)):
        raise TypeError(f"cannot serialize {type(s).__name__}")
    common = {
        "format": FORMAT_VERSION,
        "distributions": s.pdist.to_list(),
        "nodes": [np.asarray(x, dtype=float).tolist() for x in s.nodes],
        "indices": [list(i) for i in s.indices],
        "values": np.asarray(s.values, dtype=float).tolist(),
    }
    if isinstance(s, HierSurrogate):
        return {
            **common,
            "basis": "newton-hier",
            "surpluses": np.asarray(s.surpluses, dtype=float).tolist(),
            "active": [list(i) for i in s.active],
        }
    if isinstance(s, PceSurrogate):
        return {
            **common,
            "basis": "orthonormal-pce",
            "recurrences": [r.to_dict() for r in s.recurrences],
            "coefficients": np.asarray(s.coefficients, dtype=float).tolist(),
            "diagnostics": _jsonable(s.diagnostics),
        }


def surrogate_from_dict(d: dict):
    """Inverse of :func:`surrogate_to_dict`."""
    if d.get("format") != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported surrogate format {d.get('format')!r}")
    try:
        pdist = ProductDistribution.from_list(d["distributions"])
        nodes = [np.array(x, dtype=float) for x in d["nodes"]]
        indices = _indices(d["indices"])
        values = np.array(d["values"], dtype=float)
        basis = d["basis"]
        if basis == "newton-hier":
            return HierSurrogate(
                pdist=pdist,
                indices=indices,
                surpluses=np.array(d["surpluses"], dtype=float),
                values=values,
                nodes=nodes,
                active=_indices(d.get("active", [])),
            )
        if basis == "orthonormal-pce":
            diag = dict(d.get("diagnostics", {}))
            if "active" in diag:
                diag["active"] = _indices(diag["active"])
            return PceSurrogate(
                pdist=pdist,
                indices=indices,
                coefficients=np.array(d["coefficients"], dtype=float),
                recurrences=[RecurrenceTable.from_dict(r) for r in d["recurrences"]],
                nodes=nodes,
                values=values,
                diagnostics=diag,
            )
    except KeyError as exc:
        raise ConfigurationError(f"surrogate file is missing field {exc}") from None
    raise ConfigurationError(f"unknown surrogate basis {basis!r}")


def save_surrogate(s, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(surrogate_to_dict(s)))
    return path


def load_surrogate(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read surrogate {path}: {exc}") from exc
    return surrogate_from_dict(data)

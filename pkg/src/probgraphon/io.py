"""JSON (de)serialization for spaces, measures, graphons, graphs and witnesses.

Reals may be JSON numbers or decimal strings. ``NaN`` and infinities are
rejected at parse time. A ``space`` field is either an inline weight
space object or, when a ``spaces`` table is supplied, a string key into
that table.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any, Mapping, Optional

import numpy as np

from .cutmetric import CutWitness
from .exceptions import InputError
from .graphon import StepGraphon
from .homdensity import DecoratedGraph
from .measures import (
    Measure,
    ProbabilityMeasure,
    SignedMeasure,
    SubProbabilityMeasure,
    TestFamily,
    WeightSpace,
)
from .sampling import MeasureGraph, SampledGraph

_MEASURE_TYPES = {
    "signed": SignedMeasure,
    "positive": Measure,
    "subprobability": SubProbabilityMeasure,
    "probability": ProbabilityMeasure,
}


def _reject_constant(name):
    raise InputError(f"non-finite JSON constant {name} is not allowed")


def loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from None


def load_file(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def dumps(obj: Any) -> str:
    """Canonical output: sorted keys, no NaN, reproducible byte for byte."""
    return json.dumps(obj, sort_keys=True, allow_nan=False, separators=(",", ": "))


def _field(obj: Mapping, key: str, kind: str):
    if not isinstance(obj, Mapping):
        raise InputError(f"{kind} must be a JSON object")
    if key not in obj:
        raise InputError(f"{kind} is missing field {key!r}")
    return obj[key]


def _real(x) -> float:
    if isinstance(x, bool):
        raise InputError("booleans are not reals")
    if isinstance(x, (int, float)):
        val = float(x)
    elif isinstance(x, str):
        try:
            val = float(Fraction(x)) if "/" in x else float(x)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a real number: {x!r}") from None
    else:
        raise InputError(f"not a real number: {x!r}")
    if not math.isfinite(val):
        raise InputError("reals must be finite")
    return val


def _reals(xs) -> list:
    if not isinstance(xs, list):
        raise InputError("expected a list of reals")
    return [_real(x) for x in xs]


def _matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InputError("expected a list of lists")
    out = [_reals(r) for r in rows]
    if len({len(r) for r in out}) > 1:
        raise InputError("ragged matrix")
    return np.array(out, dtype=float).reshape(len(out), -1)


def _int(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise InputError(f"expected an integer, got {x!r}")
    return x


# ---------------------------------------------------------------------------
# weight spaces and measures


def space_from_json(obj) -> WeightSpace:
    points = _field(obj, "points", "weightspace")
    if not isinstance(points, list):
        raise InputError("points must be a list")
    points = tuple(tuple(p) if isinstance(p, list) else p for p in points)
    cem = obj.get("cemetery")
    return WeightSpace(points, _matrix(_field(obj, "metric", "weightspace")), None if cem is None else _int(cem))


def space_to_json(space: WeightSpace) -> dict:
    return {
        "points": list(space.points),
        "metric": space.metric.tolist(),
        "cemetery": space.cemetery_index,
    }


def _resolve_space(ref, spaces: Optional[Mapping[str, WeightSpace]]) -> WeightSpace:
    if isinstance(ref, str):
        if spaces is None or ref not in spaces:
            raise InputError(f"unknown weight space reference {ref!r}")
        return spaces[ref]
    return space_from_json(ref)


def measure_from_json(obj, spaces=None, space: Optional[WeightSpace] = None) -> SignedMeasure:
    if space is None:
        space = _resolve_space(_field(obj, "space", "measure"), spaces)
    mass = _reals(_field(obj, "mass", "measure"))
    kind = obj.get("kind", "signed")
    if kind not in _MEASURE_TYPES:
        raise InputError(f"unknown measure kind {kind!r}")
    return _MEASURE_TYPES[kind](space, np.array(mass))


def measure_to_json(mu: SignedMeasure, inline_space: bool = True) -> dict:
    kind = {v: k for k, v in _MEASURE_TYPES.items()}[type(mu)]
    out = {"mass": mu.mass.tolist(), "kind": kind}
    if inline_space:
        out["space"] = space_to_json(mu.space)
    return out


def family_from_json(obj, space: WeightSpace) -> TestFamily:
    """``{"functions": [[...], ...]}`` or the string ``"canonical"``."""
    if obj is None or obj == "canonical":
        return TestFamily.canonical(space)
    return TestFamily(space, _matrix(_field(obj, "functions", "family")))


def family_to_json(fam: TestFamily) -> dict:
    return {"functions": fam.functions.tolist()}


# ---------------------------------------------------------------------------
# graphons and graphs


def graphon_from_json(obj, spaces=None) -> StepGraphon:
    space = _resolve_space(_field(obj, "space", "graphon"), spaces)
    raw_lengths = _field(obj, "lengths", "graphon")
    if not isinstance(raw_lengths, list):
        raise InputError("lengths must be a list")
    lengths = []
    for x in raw_lengths:
        if isinstance(x, str):
            try:
                lengths.append(Fraction(x))
            except (ValueError, ZeroDivisionError):
                raise InputError(f"bad rational length {x!r}") from None
        elif isinstance(x, int) and not isinstance(x, bool):
            lengths.append(Fraction(x))
        else:
            raise InputError("lengths must be exact rational strings")
    rows = _field(obj, "cells", "graphon")
    k = len(lengths)
    if not isinstance(rows, list) or len(rows) != k or any(not isinstance(r, list) or len(r) != k for r in rows):
        raise InputError(f"cells must be a {k}x{k} array of measures")
    cells = np.array(
        [[_reals(_field(c, "mass", "cell") if isinstance(c, Mapping) else c) for c in r] for r in rows],
        dtype=float,
    )
    return StepGraphon(space, tuple(lengths), cells.reshape(k, k, -1), obj.get("kind"))


def graphon_to_json(w: StepGraphon) -> dict:
    return {
        "space": space_to_json(w.space),
        "lengths": [str(x) for x in w.lengths],
        "cells": [[{"mass": w.cells[i, j].tolist()} for j in range(w.k)] for i in range(w.k)],
        "kind": w.kind,
    }


def graph_from_json(obj, spaces=None) -> SampledGraph:
    space = _resolve_space(_field(obj, "space", "graph"), spaces)
    rows = _field(obj, "weights", "graph")
    if not isinstance(rows, list):
        raise InputError("weights must be a list of lists")
    wts = [[_int(x) for x in r] for r in rows]
    n = obj.get("n", len(wts))
    if _int(n) != len(wts) or any(len(r) != n for r in wts):
        raise InputError(f"weights must be {n}x{n}")
    return SampledGraph(space, np.array(wts, dtype=np.int64).reshape(n, n), bool(obj.get("symmetric", False)))


def graph_to_json(g: SampledGraph) -> dict:
    return {
        "space": space_to_json(g.space),
        "n": g.n,
        "weights": g.weights.tolist(),
        "symmetric": g.symmetric,
    }


def measure_graph_from_json(obj, spaces=None) -> MeasureGraph:
    w = graphon_from_json({**obj, "lengths": [f"1/{len(obj.get('cells', []))}"] * len(obj.get("cells", []))}, spaces)
    return MeasureGraph(w.space, w.cells)


def measure_graph_to_json(h: MeasureGraph) -> dict:
    return {
        "space": space_to_json(h.space),
        "cells": [[{"mass": h.cells[i, j].tolist()} for j in range(h.n)] for i in range(h.n)],
    }


def decorated_from_json(obj, space: WeightSpace, fam: Optional[TestFamily] = None) -> DecoratedGraph:
    v = _int(_field(obj, "v", "decorated_graph"))
    edges = _field(obj, "edges", "decorated_graph")
    if not isinstance(edges, list) or any(not isinstance(e, list) or len(e) != 2 for e in edges):
        raise InputError("edges must be a list of [i, j] pairs")
    edges = [(_int(a), _int(b)) for a, b in edges]
    dec = _field(obj, "decorations", "decorated_graph")
    if isinstance(dec, Mapping):
        idx = [_int(n) for n in _field(dec, "family_indices", "decorations")]
        return DecoratedGraph.from_family(v, edges, fam or TestFamily.canonical(space), idx)
    mat = _matrix(dec)
    if len(mat) != len(edges):
        raise InputError("one decoration per edge is required")
    if edges and mat.shape[1] != space.size:
        raise InputError("decoration length does not match the weight space")
    return DecoratedGraph(v, edges, mat.reshape(len(edges), space.size))


def decorated_to_json(f: DecoratedGraph) -> dict:
    out = {"v": f.v, "edges": [list(e) for e in f.edges]}
    if f.family_indices is not None:
        out["decorations"] = {"family_indices": list(f.family_indices)}
    else:
        out["decorations"] = f.decorations.tolist()
    return out


def witness_to_json(wit: CutWitness) -> dict:
    return wit.to_json()


def witness_from_json(obj) -> CutWitness:
    signs = obj.get("signs") if isinstance(obj, Mapping) else None
    return CutWitness(
        tuple(_int(i) for i in _field(obj, "rows", "witness")),
        tuple(_int(i) for i in _field(obj, "cols", "witness")),
        _real(_field(obj, "value", "witness")),
        None if signs is None else tuple(_int(s) for s in signs),
    )

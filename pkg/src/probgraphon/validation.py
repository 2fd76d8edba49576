"""Input checks shared by the estimator wrappers and the CLI."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .exceptions import InputError
from .graphon import StepGraphon
from .measures import SignedMeasure, TestFamily, WeightSpace


def check_graphon(w, kind: Optional[str] = None) -> StepGraphon:
    if not isinstance(w, StepGraphon):
        raise InputError(f"expected a StepGraphon, got {type(w).__name__}")
    if kind is not None and w.kind != kind:
        raise InputError(f"expected a {kind} kernel, got a {w.kind} one")
    return w


def check_graphons(ws: Iterable, kind: Optional[str] = None) -> list:
    """Accept one kernel or an iterable of them; all must share a space."""
    if isinstance(ws, StepGraphon):
        ws = [ws]
    ws = [check_graphon(w, kind) for w in ws]
    if not ws:
        raise InputError("need at least one kernel")
    if any(w.space != ws[0].space for w in ws):
        raise InputError("kernels live on different weight spaces")
    return ws


def check_measure(mu, space: Optional[WeightSpace] = None) -> SignedMeasure:
    if not isinstance(mu, SignedMeasure):
        raise InputError(f"expected a measure, got {type(mu).__name__}")
    if space is not None and mu.space != space:
        raise InputError("measure lives on a different weight space")
    return mu


def check_family(fam, space: WeightSpace) -> TestFamily:
    if fam is None:
        return TestFamily.canonical(space)
    if not isinstance(fam, TestFamily):
        raise InputError(f"expected a TestFamily, got {type(fam).__name__}")
    if fam.space != space:
        raise InputError("test family lives on a different weight space")
    return fam


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise InputError(f"seed must be a non-negative integer, got {seed!r}")
    if seed < 0:
        raise InputError("seed must be non-negative")
    return int(seed)


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise InputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)

"""Backtracking line search shared by the position and phase optimizers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import NFMAError


@dataclass
class StepResult:
    x: np.ndarray
    value: float
    step: float
    backtracks: int
    accepted: bool


def backtracking_step(x, fx, grad, objective: Callable, *, init_step, shrink, armijo,
                      max_backtracks, project=None, feasible=None) -> StepResult:
    """One (projected) gradient-ascent step with Armijo backtracking.

    The trial point ``project(x + step * grad)`` is accepted once it is
    feasible and ``f(trial) >= f(x) + armijo * step * ||grad||^2``; otherwise
    the step shrinks by ``shrink``. Any package error raised by ``objective``
    at a trial point counts as a rejection. After ``max_backtracks`` shrinks
    without success the original point is returned with ``accepted=False``.
    """
    gnorm2 = float(np.dot(grad, grad))
    step = init_step
    for bt in range(max_backtracks + 1):
        cand = x + step * grad
        if project is not None:
            cand = project(cand)
        if feasible is None or feasible(cand):
            try:
                fc = objective(cand)
            except NFMAError:
                fc = -np.inf
            if fc >= fx + armijo * step * gnorm2:
                return StepResult(cand, float(fc), step, bt, True)
        step *= shrink
    return StepResult(x, fx, 0.0, max_backtracks, False)


def min_spacing_ok(apv: np.ndarray, d_min: float) -> bool:
    if d_min <= 0:
        return True
    c = apv.reshape(-1, 2)
    if c.shape[0] < 2:
        return True
    diff = c[:, None, :] - c[None, :, :]
    d2 = np.einsum("ija,ija->ij", diff, diff)
    iu = np.triu_indices(c.shape[0], k=1)
    return bool(np.all(d2[iu] >= d_min * d_min))


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)

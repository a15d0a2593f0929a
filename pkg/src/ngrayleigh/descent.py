"""Projected Sobolev-gradient descent on the unit sphere ``‖u‖₁ = 1``.

Objectives are 0-homogeneous in ``u``, so the sphere is only a chart.  The
search direction is the Riesz representative of the nodal gradient in the
``‖·‖₁`` inner product, which makes the iteration count insensitive to the
mesh size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .discretization import DiscreteField, laplacian, normalize_h1, sobolev_gradient

EPS = np.finfo(float).eps


@dataclass
class DescentOptions:
    initial_step: float = 1.0
    max_iter: int = 10000
    tol_opt: float = 1e-8
    min_step: float = 1e-16
    max_step: float = 1e4
    nonnegative: bool = True
    memory: int = 8


@dataclass
class DescentResult:
    value: float
    field: DiscreteField
    iterations: int
    converged: bool
    gradient_norm: float
    history: list = field(default_factory=list)
    rejected_steps: int = 0
    stalled: bool = False


# objective(u) -> (value, nodal gradient) or None when u is infeasible
Objective = Callable[[DiscreteField], Optional[tuple]]


def _chart(u: DiscreteField, nonnegative: bool) -> DiscreteField:
    if nonnegative:
        u = u.abs()
    return normalize_h1(u)


def _h1(grid, x, y) -> float:
    return float(x @ (laplacian(grid) @ y)) * grid.measure


def _tangent_gradient(u, grad):
    g = sobolev_gradient(grad).values
    g = g - _h1(u.grid, g, u.values) * u.values
    return g, math.sqrt(max(_h1(u.grid, g, g), 0.0))


def _lbfgs_direction(u, g, pairs):
    """Two-loop recursion in the ``‖·‖₁`` metric; ``pairs`` holds (s, y, 1/<s,y>)."""
    def inner(x, y):
        return _h1(u.grid, x, y)

    r = g.copy()
    coeffs = []
    for s_k, y_k, rho in reversed(pairs):
        c = rho * inner(s_k, r)
        coeffs.append(c)
        r -= c * y_k
    if pairs:
        s_k, y_k, _ = pairs[-1]
        r *= inner(s_k, y_k) / inner(y_k, y_k)
    for (s_k, y_k, rho), c in zip(pairs, reversed(coeffs)):
        r += (c - rho * inner(y_k, r)) * s_k
    r -= inner(r, u.values) * u.values
    return r, inner(r, g)


def sphere_descent(objective: Objective, u0: DiscreteField, opts: DescentOptions) -> DescentResult:
    """Minimize a 0-homogeneous objective starting from ``u0``.

    Search directions come from a limited-memory BFGS model built with the
    ``‖·‖₁`` inner product on top of the Sobolev gradient.  Backtracking
    halves the step until the objective decreases.  Once the decrease falls
    below round-off, a trial is also accepted when it does not raise the
    objective beyond round-off and lowers the gradient norm.  Infeasible
    trials (``objective`` returns ``None``) count as rejections.
    """
    u = _chart(u0, opts.nonnegative)
    ev = objective(u)
    if ev is None:
        raise ValueError("objective undefined at the initial field")
    f, grad = ev
    g, gnorm = _tangent_gradient(u, grad)
    history = [f]
    pairs = []
    rejected = 0
    it = 0
    stalled = False
    while gnorm >= opts.tol_opt and it < opts.max_iter:
        it += 1
        d, slope = _lbfgs_direction(u, g, pairs)
        if slope <= 0:
            pairs.clear()
            d, slope = g.copy(), gnorm**2
        step = opts.initial_step if pairs else min(opts.initial_step / gnorm, opts.max_step)
        accepted = False
        while step * math.sqrt(slope) / gnorm >= opts.min_step:
            trial = _chart(u.with_values(u.values - step * d), opts.nonnegative)
            ev = objective(trial)
            if ev is not None:
                ft, grad_t = ev
                gt, gnorm_t = _tangent_gradient(trial, grad_t)
                if ft < f or (ft <= f + 8 * EPS * abs(f) and gnorm_t < gnorm):
                    accepted = True
                    break
            rejected += 1
            step *= 0.5
        if not accepted:
            if pairs:
                pairs.clear()
                continue
            stalled = True
            break
        s_k = trial.values - u.values
        y_k = gt - g
        sy = _h1(u.grid, s_k, y_k)
        if sy > 0:
            pairs.append((s_k, y_k, 1.0 / sy))
            if len(pairs) > opts.memory:
                pairs.pop(0)
        u, f, g, gnorm = trial, ft, gt, gnorm_t
        history.append(f)
    return DescentResult(
        value=f, field=u, iterations=it, converged=gnorm < opts.tol_opt,
        gradient_norm=gnorm, history=history, rejected_steps=rejected, stalled=stalled)

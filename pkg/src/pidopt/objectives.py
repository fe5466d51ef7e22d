"""Analytic test surfaces with closed-form gradients, used for convergence
runs and for checking the optimizers on something cheaper than a network."""

from __future__ import annotations

import numpy as np

from .core import FloatVector


def quadratic_eval(w: FloatVector, target: FloatVector) -> tuple[float, FloatVector]:
    """Isotropic bowl: loss = 0.5*||w - target||^2, grad = w - target."""
    if len(w) != len(target):
        raise ValueError(f"length mismatch: w has {len(w)}, target has {len(target)}")
    r = w - target
    return 0.5 * float(r @ r), r


def rosenbrock_eval(w: FloatVector) -> tuple[float, FloatVector]:
    """Decoupled Rosenbrock (a=1, b=100) over consecutive pairs.

    Coordinates pair as (w[0], w[1]), (w[2], w[3]), ...; each pair (x, y)
    contributes (1 - x)^2 + 100*(y - x^2)^2, so the length must be even.
    Global minimum at all-ones with value 0.
    """
    n = len(w)
    if n < 2 or n % 2 != 0:
        raise ValueError(f"need an even length >= 2 for pairwise Rosenbrock, got {n}")
    x = w[0::2]
    y = w[1::2]
    gap = y - x * x
    loss = float(np.sum((1.0 - x) ** 2 + 100.0 * gap**2))
    grad = np.empty_like(w)
    grad[0::2] = -2.0 * (1.0 - x) - 400.0 * x * gap
    grad[1::2] = 200.0 * gap
    return loss, grad

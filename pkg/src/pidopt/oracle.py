"""Independent verification machinery.

`scalar_step` re-implements every step rule for a single coordinate in the
most literal way possible: plain Python floats, `math` functions, operations
in the order the update rules are written.  It deliberately shares no
arithmetic helpers with the vectorized implementations in
:mod:`pidopt.optimizers` -- the duplication is the point, so the two can
check each other.  Used only by tests and the `verify` subcommand; written
for clarity, not speed.

`finite_diff_grad` is the central-difference gradient checker that plays the
same independent role for the analytic objectives and the network backprop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import HyperParams


@dataclass
class ScalarState:
    """One coordinate of optimizer state.

    i is the integral accumulator, dd the derivative EMA, v/d the EMAs of the
    squared gradient and squared gradient difference, v_max/d_max their
    running maxima.
    """

    t: int = 0
    m: float = 0.0
    v: float = 0.0
    d: float = 0.0
    i: float = 0.0
    dd: float = 0.0
    v_max: float = 0.0
    d_max: float = 0.0
    g_prev: float = 0.0


def scalar_step(algorithm: str, s: ScalarState, g: float, hp: HyperParams) -> tuple[float, ScalarState]:
    """One naive scalar step of `algorithm`; returns (delta, new_state)."""
    t = s.t + 1

    if algorithm == "sgdm":
        m = hp.gamma * s.m + g
        delta = -hp.eta * m
        return delta, replace(s, t=t, m=m)

    if algorithm == "adam":
        m = hp.gamma * s.m + (1.0 - hp.gamma) * g
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        m_hat = m / (1.0 - hp.gamma**t)
        v_hat = v / (1.0 - hp.beta**t)
        delta = -hp.eta * m_hat / (math.sqrt(v_hat) + hp.sigma)
        return delta, replace(s, t=t, m=m, v=v)

    if algorithm == "amsgrad":
        m = hp.gamma * s.m + (1.0 - hp.gamma) * g
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        v_max = max(s.v_max, v)
        m_hat = m / (1.0 - hp.gamma**t)
        v_hat_max = v_max / (1.0 - hp.beta**t)
        delta = -hp.eta * m_hat / (math.sqrt(v_hat_max) + hp.sigma)
        return delta, replace(s, t=t, m=m, v=v, v_max=v_max)

    if algorithm == "diffgrad":
        dg = g - s.g_prev
        mu = 1.0 / (1.0 + math.exp(-abs(dg)))
        m = hp.gamma * s.m + (1.0 - hp.gamma) * g
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        m_hat = m / (1.0 - hp.gamma**t)
        v_hat = v / (1.0 - hp.beta**t)
        delta = mu * (-hp.eta * m_hat / (math.sqrt(v_hat) + hp.sigma))
        return delta, replace(s, t=t, m=m, v=v, g_prev=g)

    if algorithm == "pid":
        i = hp.gamma * s.i - hp.eta * g
        dg = g - s.g_prev
        dd = hp.gamma * s.dd + (1.0 - hp.gamma) * dg
        delta = i + hp.kd * dd
        return delta, replace(s, t=t, i=i, dd=dd, g_prev=g)

    if algorithm == "adapid":
        i = hp.gamma * s.i + g
        dg = g - s.g_prev
        dd = hp.gamma * s.dd + (1.0 - hp.gamma) * dg
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        d = hp.beta * s.d + (1.0 - hp.beta) * (dg * dg)
        v_hat = v / (1.0 - hp.beta**t)
        d_hat = d / (1.0 - hp.beta**t)
        delta = -hp.eta * (
            hp.ki * i / (math.sqrt(v_hat) + hp.sigma)
            + hp.kd * dd / (math.sqrt(d_hat) + hp.sigma)
        )
        return delta, replace(s, t=t, i=i, dd=dd, v=v, d=d, g_prev=g)

    if algorithm == "adapid-ams":
        i = hp.gamma * s.i + g
        dg = g - s.g_prev
        dd = hp.gamma * s.dd + (1.0 - hp.gamma) * dg
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        d = hp.beta * s.d + (1.0 - hp.beta) * (dg * dg)
        v_max = max(s.v_max, v)
        d_max = max(s.d_max, d)
        v_hat_max = v_max / (1.0 - hp.beta**t)
        d_hat_max = d_max / (1.0 - hp.beta**t)
        delta = -hp.eta * (
            hp.ki * i / (math.sqrt(v_hat_max) + hp.sigma)
            + hp.kd * dd / (math.sqrt(d_hat_max) + hp.sigma)
        )
        return delta, replace(s, t=t, i=i, dd=dd, v=v, d=d, v_max=v_max, d_max=d_max, g_prev=g)

    if algorithm == "adapid-diff":
        dg = g - s.g_prev
        mu = 1.0 / (1.0 + math.exp(-abs(dg)))
        i = hp.gamma * s.i + g
        dd = hp.gamma * s.dd + (1.0 - hp.gamma) * dg
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        d = hp.beta * s.d + (1.0 - hp.beta) * (dg * dg)
        v_hat = v / (1.0 - hp.beta**t)
        d_hat = d / (1.0 - hp.beta**t)
        delta = -hp.eta * mu * (
            hp.ki * i / (math.sqrt(v_hat) + hp.sigma)
            + hp.kd * dd / (math.sqrt(d_hat) + hp.sigma)
        )
        return delta, replace(s, t=t, i=i, dd=dd, v=v, d=d, g_prev=g)

    if algorithm == "iadapid-adg":
        dg = g - s.g_prev
        mu = 1.0 / (1.0 + math.exp(-abs(dg)))
        i = hp.gamma * s.i + g
        dd = hp.gamma * s.dd + (1.0 - hp.gamma) * dg
        v = hp.beta * s.v + (1.0 - hp.beta) * (g * g)
        d = hp.beta * s.d + (1.0 - hp.beta) * (dg * dg)
        v_max = max(s.v_max, v)
        d_max = max(s.d_max, d)
        v_hat_max = v_max / (1.0 - hp.beta**t)
        d_hat_max = d_max / (1.0 - hp.beta**t)
        delta = -hp.eta * mu * (
            hp.ki * i / (math.sqrt(v_hat_max) + hp.sigma)
            + hp.kd * dd / (math.sqrt(d_hat_max) + hp.sigma)
        )
        return delta, replace(s, t=t, i=i, dd=dd, v=v, d=d, v_max=v_max, d_max=d_max, g_prev=g)

    raise ValueError(f"unknown algorithm '{algorithm}'")


def scalar_trajectory(algorithm: str, gradients: np.ndarray, hp: HyperParams) -> np.ndarray:
    """Deltas from driving independent scalar states with each coordinate of
    a (steps, dim) gradient sequence.  Returns a (steps, dim) array."""
    steps, dim = gradients.shape
    states = [ScalarState() for _ in range(dim)]
    deltas = np.empty((steps, dim))
    for k in range(steps):
        for j in range(dim):
            deltas[k, j], states[j] = scalar_step(algorithm, states[j], float(gradients[k, j]), hp)
    return deltas


def finite_diff_grad(loss_fn, w: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(w + h e_i) - f(w - h e_i)) / (2h).

    Raises ArithmeticError if any probed loss is non-finite.
    """
    if h <= 0:
        raise ValueError(f"step size must be > 0, got {h}")
    grad = np.empty_like(w, dtype=np.float64)
    for idx in range(w.size):
        wp = w.astype(np.float64).copy()
        wm = w.astype(np.float64).copy()
        wp.flat[idx] += h
        wm.flat[idx] -= h
        fp = float(loss_fn(wp))
        fm = float(loss_fn(wm))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise ArithmeticError(f"non-finite loss while probing coordinate {idx}")
        grad.flat[idx] = (fp - fm) / (2.0 * h)
    return grad

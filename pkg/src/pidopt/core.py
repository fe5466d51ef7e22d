"""Shared numeric types for the optimizer family: hyperparameters, per-run
state buffers, and the two primitives (bias correction, gradient-difference
modulation) every adaptive step rule is built from.

All buffers are float64; parameter and gradient vectors are flat 1-D arrays
of equal length.  A state object belongs to exactly one training run and is
never shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

FloatVector = np.ndarray


@dataclass(frozen=True)
class HyperParams:
    """Scalar knobs shared by all step rules.

    gamma is the first-moment / integral-derivative decay (alpha for the
    Adam-family rules), beta the squared-quantity decay, ki/kd the integral
    and derivative gains, sigma the denominator stability constant.
    use_max and use_modulation toggle the running-max denominators and the
    gradient-difference modulation factor in the combined optimizer.
    """

    eta: float = 0.001
    gamma: float = 0.9
    beta: float = 0.99
    ki: float = 0.5
    kd: float = 1.0
    sigma: float = 1e-8
    use_max: bool = True
    use_modulation: bool = True

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")
        if self.ki < 0 or self.kd < 0:
            raise ValueError(f"gains must be >= 0, got ki={self.ki}, kd={self.kd}")


@dataclass
class OptimizerState:
    """Persistent per-coordinate buffers of one optimization run.

    Only the buffers an algorithm needs are allocated; the rest stay None.
    t counts completed steps and increments by exactly 1 per step.
    """

    t: int = 0
    m: FloatVector | None = None        # first moment (Adam family)
    v: FloatVector | None = None        # EMA of squared gradients
    d: FloatVector | None = None        # EMA of squared gradient differences
    i_term: FloatVector | None = None   # integral accumulator
    d_term: FloatVector | None = None   # derivative EMA
    v_max: FloatVector | None = None    # running max of v
    d_max: FloatVector | None = None    # running max of d
    g_prev: FloatVector | None = None   # gradient of the previous step

    def buffers(self) -> dict[str, FloatVector]:
        """Allocated buffers by field name."""
        out = {}
        for name in ("m", "v", "d", "i_term", "d_term", "v_max", "d_max", "g_prev"):
            buf = getattr(self, name)
            if buf is not None:
                out[name] = buf
        return out

    def dim(self) -> int:
        for buf in self.buffers().values():
            return len(buf)
        raise ValueError("state has no allocated buffers")

    def evolve(self, **updates) -> "OptimizerState":
        """Successor state with t advanced and the given buffers replaced."""
        return replace(self, t=self.t + 1, **updates)


def zero_state(buffer_names: tuple[str, ...], dim: int) -> OptimizerState:
    """Fresh state with the named buffers zero-initialized at t = 0."""
    return OptimizerState(**{name: np.zeros(dim) for name in buffer_names})


def bias_correct(x: FloatVector, decay: float, t: int) -> FloatVector:
    """Divide a zero-initialized moving average by (1 - decay**t).

    t must be >= 1; at t = 0 the correction factor is zero.
    """
    if t < 1:
        raise ValueError(f"bias correction needs t >= 1, got t={t}")
    return x / (1.0 - decay**t)


def modulation_factor(delta_g: FloatVector) -> FloatVector:
    """Sigmoid of the absolute gradient difference, 1 / (1 + exp(-|dg|)).

    Output lies in [0.5, 1) and grows with |dg|.  For |dg| large enough
    that exp underflows, the value is pinned to the largest double below 1
    so the open upper bound holds for every input.
    """
    mu = 1.0 / (1.0 + np.exp(-np.abs(delta_g)))
    return np.minimum(mu, np.nextafter(1.0, 0.0))

"""The nine first-order step rules, each a pure state-transition function

    step(state, g, hp) -> StepResult(delta, new_state)

where delta is the amount *added* to the parameters (w_new = w + delta) and
new_state carries the advanced buffers.  The rules fall in three families:

* Adam family: momentum SGD, Adam, AMSGrad, DiffGrad (gamma plays the role
  of the first-moment decay alpha).
* PID: integral/derivative update with a fixed learning rate.
* AdaPID family: PID terms with per-coordinate adaptive denominators, plus
  the running-max (AMS) and gradient-difference modulation (Diff) variants
  and their combination IAdaPID-ADG.

All rules are element-wise, so coordinates evolve independently.  States must
not be stepped concurrently; distinct states may run in parallel.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .core import FloatVector, HyperParams, OptimizerState, bias_correct, modulation_factor, zero_state


class StepResult(NamedTuple):
    delta: FloatVector
    new_state: OptimizerState


StepFn = Callable[[OptimizerState, FloatVector, HyperParams], StepResult]


def _check(state: OptimizerState, g: FloatVector, *required: str) -> None:
    if g.ndim != 1:
        raise ValueError(f"gradient must be 1-D, got shape {g.shape}")
    for name in required:
        buf = getattr(state, name)
        if buf is None:
            raise ValueError(f"state is missing required buffer '{name}'")
        if len(buf) != len(g):
            raise ValueError(
                f"length mismatch: gradient has {len(g)} entries, "
                f"buffer '{name}' has {len(buf)}"
            )


def momentum_sgd_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """Heavy-ball momentum: m = gamma*m + g, delta = -eta*m."""
    _check(state, g, "m")
    m = hp.gamma * state.m + g
    delta = -hp.eta * m
    return StepResult(delta, state.evolve(m=m))


def adam_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """Adam with decays (gamma, beta) and bias-corrected moments."""
    _check(state, g, "m", "v")
    t = state.t + 1
    m = hp.gamma * state.m + (1.0 - hp.gamma) * g
    v = hp.beta * state.v + (1.0 - hp.beta) * (g * g)
    m_hat = bias_correct(m, hp.gamma, t)
    v_hat = bias_correct(v, hp.beta, t)
    delta = -hp.eta * m_hat / (np.sqrt(v_hat) + hp.sigma)
    return StepResult(delta, state.evolve(m=m, v=v))


def amsgrad_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """Adam with the second moment replaced by its bias-corrected running max."""
    _check(state, g, "m", "v", "v_max")
    t = state.t + 1
    m = hp.gamma * state.m + (1.0 - hp.gamma) * g
    v = hp.beta * state.v + (1.0 - hp.beta) * (g * g)
    v_max = np.maximum(state.v_max, v)
    m_hat = bias_correct(m, hp.gamma, t)
    v_hat = bias_correct(v_max, hp.beta, t)
    delta = -hp.eta * m_hat / (np.sqrt(v_hat) + hp.sigma)
    return StepResult(delta, state.evolve(m=m, v=v, v_max=v_max))


def diffgrad_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """Adam scaled element-wise by the modulation factor of g - g_prev."""
    _check(state, g, "m", "v", "g_prev")
    t = state.t + 1
    dg = g - state.g_prev
    m = hp.gamma * state.m + (1.0 - hp.gamma) * g
    v = hp.beta * state.v + (1.0 - hp.beta) * (g * g)
    m_hat = bias_correct(m, hp.gamma, t)
    v_hat = bias_correct(v, hp.beta, t)
    adam_delta = -hp.eta * m_hat / (np.sqrt(v_hat) + hp.sigma)
    delta = modulation_factor(dg) * adam_delta
    return StepResult(delta, state.evolve(m=m, v=v, g_prev=g.copy()))


def pid_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """Fixed-rate PID update: I = gamma*I - eta*g, D tracks gradient change,
    delta = I + kd*D.  The proportional part lives in I's newest term."""
    _check(state, g, "i_term", "d_term", "g_prev")
    i_term = hp.gamma * state.i_term - hp.eta * g
    dg = g - state.g_prev
    d_term = hp.gamma * state.d_term + (1.0 - hp.gamma) * dg
    delta = i_term + hp.kd * d_term
    return StepResult(delta, state.evolve(i_term=i_term, d_term=d_term, g_prev=g.copy()))


def _adapid_family(
    state: OptimizerState,
    g: FloatVector,
    hp: HyperParams,
    use_max: bool,
    use_modulation: bool,
) -> StepResult:
    """Shared AdaPID recurrence; the four public variants differ only in
    which denominators they read and whether the modulation factor applies.

    The flag-off paths are bit-identical to plain AdaPID: the delta is
    assembled as bracket -> (optional mu *) -> (-eta *), and maxima buffers,
    when allocated, keep updating regardless of use_max.
    """
    _check(state, g, "i_term", "d_term", "v", "d", "g_prev")
    if use_max:
        _check(state, g, "v_max", "d_max")
    t = state.t + 1
    dg = g - state.g_prev

    i_term = hp.gamma * state.i_term + g
    d_term = hp.gamma * state.d_term + (1.0 - hp.gamma) * dg
    v = hp.beta * state.v + (1.0 - hp.beta) * (g * g)
    d = hp.beta * state.d + (1.0 - hp.beta) * (dg * dg)

    updates: dict[str, FloatVector] = {
        "i_term": i_term, "d_term": d_term, "v": v, "d": d, "g_prev": g.copy(),
    }
    if state.v_max is not None:
        updates["v_max"] = np.maximum(state.v_max, v)
    if state.d_max is not None:
        updates["d_max"] = np.maximum(state.d_max, d)

    if use_max:
        v_hat = bias_correct(updates["v_max"], hp.beta, t)
        d_hat = bias_correct(updates["d_max"], hp.beta, t)
    else:
        v_hat = bias_correct(v, hp.beta, t)
        d_hat = bias_correct(d, hp.beta, t)

    bracket = hp.ki * i_term / (np.sqrt(v_hat) + hp.sigma) \
        + hp.kd * d_term / (np.sqrt(d_hat) + hp.sigma)
    if use_modulation:
        bracket = modulation_factor(dg) * bracket
    delta = -hp.eta * bracket
    return StepResult(delta, state.evolve(**updates))


def adapid_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """AdaPID: PID terms with Adam-style adaptive denominators.

    I = gamma*I + g (no learning rate inside), D = gamma*D + (1-gamma)*dg,
    v/d track squared gradients and squared gradient differences, and
    delta = -eta * (ki*I/(sqrt(v_hat)+sigma) + kd*D/(sqrt(d_hat)+sigma)).
    """
    return _adapid_family(state, g, hp, use_max=False, use_modulation=False)


def adapid_ams_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """AdaPID with running-max denominators (bias-corrected on read)."""
    return _adapid_family(state, g, hp, use_max=True, use_modulation=False)


def adapid_diff_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """AdaPID scaled element-wise by the modulation factor of g - g_prev."""
    return _adapid_family(state, g, hp, use_max=False, use_modulation=True)


def iadapid_adg_step(state: OptimizerState, g: FloatVector, hp: HyperParams) -> StepResult:
    """IAdaPID-ADG: AdaPID with both running-max denominators and the
    gradient-difference modulation factor.

    The two additions can be disabled through hp.use_max / hp.use_modulation;
    with both off the outputs degenerate exactly to plain AdaPID.
    """
    return _adapid_family(state, g, hp, use_max=hp.use_max, use_modulation=hp.use_modulation)


ALGORITHMS: dict[str, StepFn] = {
    "sgdm": momentum_sgd_step,
    "adam": adam_step,
    "amsgrad": amsgrad_step,
    "diffgrad": diffgrad_step,
    "pid": pid_step,
    "adapid": adapid_step,
    "adapid-ams": adapid_ams_step,
    "adapid-diff": adapid_diff_step,
    "iadapid-adg": iadapid_adg_step,
}

STATE_BUFFERS: dict[str, tuple[str, ...]] = {
    "sgdm": ("m",),
    "adam": ("m", "v"),
    "amsgrad": ("m", "v", "v_max"),
    "diffgrad": ("m", "v", "g_prev"),
    "pid": ("i_term", "d_term", "g_prev"),
    "adapid": ("i_term", "d_term", "v", "d", "g_prev"),
    "adapid-ams": ("i_term", "d_term", "v", "d", "v_max", "d_max", "g_prev"),
    "adapid-diff": ("i_term", "d_term", "v", "d", "g_prev"),
    "iadapid-adg": ("i_term", "d_term", "v", "d", "v_max", "d_max", "g_prev"),
}


def init_state(algorithm: str, dim: int) -> OptimizerState:
    """Zero-initialized state with exactly the buffers `algorithm` needs."""
    if algorithm not in STATE_BUFFERS:
        raise ValueError(f"unknown algorithm '{algorithm}'; choose from {sorted(STATE_BUFFERS)}")
    return zero_state(STATE_BUFFERS[algorithm], dim)


class Optimizer:
    """Stateful wrapper pairing a step rule with its evolving state.

    Typical loop:

        opt = Optimizer("adam", dim=3)
        for g in gradients:
            w = opt.apply(w, g)
    """

    def __init__(self, algorithm: str, dim: int, hp: HyperParams | None = None):
        self.algorithm = algorithm
        self.hp = hp if hp is not None else HyperParams()
        self.state = init_state(algorithm, dim)
        self._step_fn = ALGORITHMS[algorithm]

    def step(self, g: FloatVector) -> FloatVector:
        """Advance the state by one gradient and return the parameter delta."""
        delta, self.state = self._step_fn(self.state, g, self.hp)
        return delta

    def apply(self, w: FloatVector, g: FloatVector) -> FloatVector:
        """Return w updated by one step on gradient g."""
        return w + self.step(g)

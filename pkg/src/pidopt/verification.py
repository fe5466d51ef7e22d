"""Release-gate checks: every step rule against the scalar oracle, the exact
structural identities between the optimizer variants, and the
finite-difference gradient checks for the objectives and the network.

Each check returns a :class:`CheckResult`; `verify()` bundles the whole
battery.  All randomness here uses fixed internal seeds so the gate is a
pure function of the code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import optimizers as opt_mod
from .core import HyperParams, modulation_factor
from .data import Batch
from .network import he_init, mlp_loss_and_grad, params_to_vector, set_params_from_vector
from .objectives import quadratic_eval, rosenbrock_eval
from .optimizers import init_state
from .oracle import finite_diff_grad, scalar_trajectory
from .rng import Rng, STREAM_GRADS, derive_seed

_SEED = 1822


@dataclass(frozen=True)
class CheckResult:
    check: str
    subject: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.check:<22} {self.subject:<14} {self.detail}"


def random_gradients(steps: int, dim: int, seed: int = _SEED) -> np.ndarray:
    """Seeded standard-normal gradient sequence, shape (steps, dim)."""
    rng = Rng(derive_seed(seed, STREAM_GRADS))
    return rng.normals(steps * dim).reshape(steps, dim)


def vector_trajectory(algorithm: str, gradients: np.ndarray,
                      hp: HyperParams) -> np.ndarray:
    """Deltas of the vectorized step rule over a gradient sequence."""
    steps, dim = gradients.shape
    step_fn = opt_mod.ALGORITHMS[algorithm]
    state = init_state(algorithm, dim)
    deltas = np.empty((steps, dim))
    for k in range(steps):
        deltas[k], state = step_fn(state, gradients[k], hp)
    return deltas


def check_oracle_equivalence(algorithm: str, steps: int = 1000, dim: int = 10,
                             tol: float = 1e-12) -> CheckResult:
    """Vectorized rule vs per-coordinate scalar oracle on one trajectory."""
    hp = HyperParams()
    grads = random_gradients(steps, dim)
    diff = np.abs(vector_trajectory(algorithm, grads, hp)
                  - scalar_trajectory(algorithm, grads, hp)).max()
    return CheckResult("oracle-equivalence", algorithm, bool(diff < tol),
                       f"max_abs_diff={diff:.3e} (tol {tol:.0e})")


def check_zero_fixed_point(algorithm: str) -> CheckResult:
    """A zero gradient from zero state must move nothing and stay zero."""
    hp = HyperParams()
    state = init_state(algorithm, 4)
    delta, new_state = opt_mod.ALGORITHMS[algorithm](state, np.zeros(4), hp)
    clean = bool(np.all(delta == 0.0)) and all(
        np.all(buf == 0.0) for buf in new_state.buffers().values())
    return CheckResult("zero-fixed-point", algorithm, clean,
                       f"max_abs_delta={np.abs(delta).max():.1e}")


def check_max_monotonicity(algorithm: str, steps: int = 1000, dim: int = 10) -> CheckResult:
    """Running maxima must never decrease, coordinate-wise, exactly."""
    hp = HyperParams()
    grads = random_gradients(steps, dim)
    step_fn = opt_mod.ALGORITHMS[algorithm]
    state = init_state(algorithm, dim)
    ok = True
    for k in range(steps):
        prev_v, prev_d = state.v_max, state.d_max
        _, state = step_fn(state, grads[k], hp)
        if np.any(state.v_max < prev_v):
            ok = False
        if prev_d is not None and np.any(state.d_max < prev_d):
            ok = False
    return CheckResult("max-monotonicity", algorithm, ok, f"{steps} steps")


def check_modulation_bounds(n: int = 100_000) -> CheckResult:
    """mu(dg) in [0.5, 1) even for inputs large enough to underflow exp."""
    rng = Rng(derive_seed(_SEED, 7))
    z = rng.normals(n)
    scales = np.ones(n)
    scales[: n // 4] = 100.0
    scales[n // 4: n // 2] = 1e6
    mu = modulation_factor(z * scales)
    ok = bool(np.all(mu >= 0.5) and np.all(mu < 1.0))
    return CheckResult("modulation-bounds", "mu", ok,
                       f"range=[{mu.min():.6f}, {mu.max():.17f}] over {n}")


def check_factorization(steps: int = 200, dim: int = 6) -> CheckResult:
    """IAdaPID-ADG delta must equal mu applied to the AdaPID-AMS delta.

    The two assemble the same three factors in a different multiplication
    order, so equality holds to within a couple of ulps per coordinate.
    """
    hp = HyperParams()
    grads = random_gradients(steps, dim, seed=_SEED + 1)
    state = init_state("iadapid-adg", dim)
    worst = 0.0
    for k in range(steps):
        g = grads[k]
        mu = modulation_factor(g - state.g_prev)
        combined, next_state = opt_mod.ALGORITHMS["iadapid-adg"](state, g, hp)
        ams, _ = opt_mod.ALGORITHMS["adapid-ams"](state, g, hp)
        err = np.abs(combined - mu * ams)
        bound = 1e-13 * np.abs(combined) + 1e-16
        worst = max(worst, float((err - bound).max()))
        state = next_state
    return CheckResult("modulation-factorize", "iadapid-adg", bool(worst <= 0.0),
                       f"worst_excess={worst:.3e} over {steps} steps")


def check_degeneration(steps: int = 500, dim: int = 6) -> CheckResult:
    """With use_max and use_modulation off, IAdaPID-ADG must reproduce plain
    AdaPID bit-for-bit."""
    hp = HyperParams(use_max=False, use_modulation=False)
    grads = random_gradients(steps, dim, seed=_SEED + 2)
    s_combined = init_state("iadapid-adg", dim)
    s_plain = init_state("adapid", dim)
    exact = True
    for k in range(steps):
        d1, s_combined = opt_mod.ALGORITHMS["iadapid-adg"](s_combined, grads[k], hp)
        d2, s_plain = opt_mod.ALGORITHMS["adapid"](s_plain, grads[k], hp)
        if not np.array_equal(d1, d2):
            exact = False
    return CheckResult("flag-degeneration", "iadapid-adg", exact,
                       f"{steps} steps, bitwise")


def check_decoupling(algorithm: str, steps: int = 100) -> CheckResult:
    """A d=2 run must equal two independent d=1 runs, coordinate-wise."""
    hp = HyperParams()
    grads = random_gradients(steps, 2, seed=_SEED + 3)
    both = vector_trajectory(algorithm, grads, hp)
    first = vector_trajectory(algorithm, grads[:, :1], hp)
    second = vector_trajectory(algorithm, grads[:, 1:], hp)
    exact = np.array_equal(both, np.hstack([first, second]))
    return CheckResult("coordinate-decoupling", algorithm, bool(exact),
                       f"{steps} steps, bitwise")


def check_antisymmetry(algorithm: str) -> CheckResult:
    """One step on -g from zero state negates the delta of one step on g."""
    hp = HyperParams()
    g = random_gradients(1, 8, seed=_SEED + 4)[0]
    plus, _ = opt_mod.ALGORITHMS[algorithm](init_state(algorithm, 8), g, hp)
    minus, _ = opt_mod.ALGORITHMS[algorithm](init_state(algorithm, 8), -g, hp)
    diff = float(np.abs(plus + minus).max())
    return CheckResult("antisymmetry", algorithm, bool(diff == 0.0),
                       f"max_abs_diff={diff:.1e}")


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / denom


def check_quadratic_grad(tol: float = 1e-6) -> CheckResult:
    rng = Rng(derive_seed(_SEED, 8))
    w = rng.normals(7)
    target = rng.normals(7)
    _, grad = quadratic_eval(w, target)
    fd = finite_diff_grad(lambda v: quadratic_eval(v, target)[0], w)
    err = _rel_err(grad, fd)
    return CheckResult("gradient-check", "quadratic", bool(err < tol),
                       f"rel_err={err:.3e} (tol {tol:.0e})")


def check_rosenbrock_grad(tol: float = 1e-6) -> CheckResult:
    rng = Rng(derive_seed(_SEED, 9))
    w = rng.normals(6) * 0.8
    _, grad = rosenbrock_eval(w)
    fd = finite_diff_grad(lambda v: rosenbrock_eval(v)[0], w)
    err = _rel_err(grad, fd)
    return CheckResult("gradient-check", "rosenbrock", bool(err < tol),
                       f"rel_err={err:.3e} (tol {tol:.0e})")


def check_mlp_grad(tol: float = 1e-7) -> CheckResult:
    """Backprop vs central differences on tiny dropout-free models with
    one, two, and three weight layers."""
    worst = 0.0
    for i, dims in enumerate(([5, 3], [6, 4, 3], [5, 8, 4, 3])):
        model = he_init(dims, seed=_SEED + 10 + i)
        rng = Rng(derive_seed(_SEED, 20 + i))
        x = rng.normals(6 * dims[0]).reshape(6, dims[0])
        y = (rng.raw(6) % np.uint64(dims[-1])).astype(np.int64)
        batch = Batch(x, y)
        _, grads, _ = mlp_loss_and_grad(model, batch, training=False, rng_seed=0)

        w0 = params_to_vector(model)

        def loss_at(vec, model=model, batch=batch):
            set_params_from_vector(model, vec)
            loss, _, _ = mlp_loss_and_grad(model, batch, training=False, rng_seed=0)
            return loss

        fd = finite_diff_grad(loss_at, w0)
        set_params_from_vector(model, w0)
        worst = max(worst, _rel_err(grads, fd))
    return CheckResult("gradient-check", "mlp-backprop", bool(worst < tol),
                       f"rel_err={worst:.3e} (tol {tol:.0e})")


def verify() -> list[CheckResult]:
    """Run the full battery; one result per (check, subject) pair."""
    results = []
    for algorithm in opt_mod.ALGORITHMS:
        results.append(check_oracle_equivalence(algorithm))
    for algorithm in opt_mod.ALGORITHMS:
        results.append(check_zero_fixed_point(algorithm))
    for algorithm in ("amsgrad", "adapid-ams", "iadapid-adg"):
        results.append(check_max_monotonicity(algorithm))
    for algorithm in opt_mod.ALGORITHMS:
        results.append(check_antisymmetry(algorithm))
    for algorithm in opt_mod.ALGORITHMS:
        results.append(check_decoupling(algorithm))
    results.append(check_modulation_bounds())
    results.append(check_factorization())
    results.append(check_degeneration())
    results.append(check_quadratic_grad())
    results.append(check_rosenbrock_grad())
    results.append(check_mlp_grad())
    return results

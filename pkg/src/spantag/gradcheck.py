"""Central-difference verification of analytic gradients.

The checker perturbs individual parameter coordinates and compares
(f(w+eps) - f(w-eps)) / 2eps against the gradient produced by backward().
Coordinates whose +eps / -eps evaluations land on different sides of a
branching op (ReLU, clip) are skipped: the loss is not differentiable
there and the comparison is meaningless. Checks run in double precision;
the central-difference tolerance is unreachable in single.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autograd import AutogradError, Node, ParamStore, backward, branch_signature


@dataclass
class GradCheckReport:
    """Per-parameter worst relative error between analytic and numeric
    gradients; pass iff every error is below tolerance."""

    max_rel_err: dict[str, float]
    tolerance: float
    n_checked: int
    n_skipped: int
    passed: bool

    @property
    def worst(self) -> tuple[str, float]:
        if not self.max_rel_err:
            return ("", 0.0)
        name = max(self.max_rel_err, key=lambda k: self.max_rel_err[k])
        return (name, self.max_rel_err[name])


def _relative_error(analytic: float, numeric: float) -> float:
    denom = max(abs(analytic), abs(numeric))
    if denom == 0.0:
        return 0.0
    return abs(analytic - numeric) / denom


def finite_diff_check(
    closure: Callable[[], Node],
    store: ParamStore,
    epsilon: float = 1e-3,
    tolerance: float = 1e-4,
    samples_per_param: int | None = None,
    sample_seed: int = 0,
) -> GradCheckReport:
    """Compare backward() gradients of ``closure`` with central differences.

    ``closure`` rebuilds the forward computation from the store's current
    values and returns a scalar node; it must be deterministic (dropout
    off, no RNG consumption). ``samples_per_param`` bounds how many
    coordinates of each tensor are probed (None = all of them).
    """
    if store.dtype != np.float64:
        raise AutogradError("finite_diff_check requires a float64 ParamStore")

    first = closure()
    second = closure()
    if first.value.shape != () or second.value.shape != ():
        raise AutogradError("closure must return a scalar node")
    if first.value.tobytes() != second.value.tobytes():
        raise AutogradError("closure is not deterministic: two forward passes disagree")

    store.zero_grad()
    backward(second)
    analytic = {name: node.grad.copy() for name, node in store.items()}
    store.zero_grad()

    rng = np.random.default_rng(sample_seed)
    max_rel_err: dict[str, float] = {}
    n_checked = 0
    n_skipped = 0
    for name, node in store.items():
        flat = node.value.reshape(-1)
        size = flat.size
        if samples_per_param is None or samples_per_param >= size:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=samples_per_param, replace=False)
        worst = 0.0
        for k in coords:
            orig = flat[k]
            flat[k] = orig + epsilon
            plus = closure()
            flat[k] = orig - epsilon
            minus = closure()
            flat[k] = orig
            if branch_signature(plus) != branch_signature(minus):
                n_skipped += 1
                continue
            numeric = (float(plus.value) - float(minus.value)) / (2.0 * epsilon)
            a = float(analytic[name].reshape(-1)[k])
            worst = max(worst, _relative_error(a, numeric))
            n_checked += 1
        max_rel_err[name] = worst
    passed = all(err < tolerance for err in max_rel_err.values())
    return GradCheckReport(
        max_rel_err=max_rel_err,
        tolerance=tolerance,
        n_checked=n_checked,
        n_skipped=n_skipped,
        passed=passed,
    )

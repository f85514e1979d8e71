# src/Core/Tools/Tensor/gradcheck.py
# Central-difference oracle for backward().

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from src.Core.Models.errors import NumericError
from src.Core.Models.reports import GradCheckResult
from src.Core.Tools.Tensor.tensor import Tensor, backward

ScalarFn = Callable[[Tensor], "Tensor | float"]

RELATIVE_TOLERANCE = 1e-3
ABSOLUTE_FLOOR = 1e-8


def _as_float(value: "Tensor | float") -> float:
    result = value.item() if isinstance(value, Tensor) else float(value)
    if not np.isfinite(result):
        raise NumericError("finite-difference objective returned a non-finite value")
    return result


def finite_diff_gradient(f: ScalarFn, x: Tensor, eps: float = 1e-4) -> Tensor:
    """(f(x + eps e_i) - f(x - eps e_i)) / 2 eps for every element of ``x``.

    ``x.data`` is perturbed in place and restored, so ``f`` may close over ``x``
    (e.g. a model parameter) or use its argument.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    original = x.data
    work = original.copy()
    grad = np.zeros(original.shape, dtype=np.float64)
    flat = work.reshape(-1)
    out = grad.reshape(-1)
    try:
        x.data = work
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            plus = _as_float(f(x))
            flat[i] = saved - eps
            minus = _as_float(f(x))
            flat[i] = saved
            out[i] = (plus - minus) / (2.0 * eps)
    finally:
        x.data = original
    return Tensor(grad, dtype=original.dtype)


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Relative error per element; elements with |numeric| below the floor compare absolutely."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    diff = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.where(np.abs(numeric) < ABSOLUTE_FLOOR, diff, diff / np.where(scale == 0, 1.0, scale))
    return float(rel.max())


def check_gradients(
    loss_fn: Callable[[], Tensor],
    tensors: Mapping[str, Tensor],
    eps: float = 1e-4,
    tolerance: float = RELATIVE_TOLERANCE,
) -> list[GradCheckResult]:
    """Compare backward() against finite differences for every named tensor.

    ``loss_fn`` rebuilds the scalar loss from scratch on each call.
    """
    for t in tensors.values():
        t.zero_grad()
    backward(loss_fn())
    results = []
    for name, t in tensors.items():
        analytic = t.grad if t.grad is not None else np.zeros(t.shape)
        numeric = finite_diff_gradient(lambda _: loss_fn(), t, eps=eps)
        err = max_relative_error(analytic, numeric.data)
        results.append(GradCheckResult(name=name, shape=list(t.shape), max_rel_error=err, passed=err < tolerance))
    return results

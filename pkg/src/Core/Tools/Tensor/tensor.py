# src/Core/Tools/Tensor/tensor.py
# Dense tensor with tape-based reverse-mode autodiff on top of numpy.

from __future__ import annotations

import contextlib
import threading
from abc import abstractmethod
from typing import Any, Iterator, Sequence

import numpy as np

from src.Core.Models.errors import DimensionError, NumericError, PrecisionError, UsageError

_SUPPORTED = (np.dtype(np.float32), np.dtype(np.float64))


class _EngineSettings(threading.local):
    def __init__(self) -> None:
        self.dtype = np.dtype(np.float32)


_settings = _EngineSettings()


def get_default_dtype() -> np.dtype:
    return _settings.dtype


@contextlib.contextmanager
def precision(dtype: Any) -> Iterator[np.dtype]:
    """Build everything inside the block in ``dtype`` (float32 or float64).

    Precision is fixed when tensors are constructed; ops inherit it from their
    inputs and refuse to mix the two.
    """
    resolved = np.dtype(dtype)
    if resolved not in _SUPPORTED:
        raise PrecisionError(f"unsupported precision {resolved}; use float32 or float64")
    previous = _settings.dtype
    _settings.dtype = resolved
    try:
        yield resolved
    finally:
        _settings.dtype = previous


def _check_finite(array: np.ndarray, where: str) -> None:
    if not np.isfinite(array).all():
        raise NumericError(f"non-finite values produced by {where}")


class Tensor:
    """Row-major numeric array with optional gradient tracking.

    Leaves created by the user keep ``grad`` after :meth:`backward`; op outputs
    remember the :class:`Function` that made them.
    """

    __slots__ = ("data", "requires_grad", "grad", "creator", "name")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        *,
        dtype: Any = None,
        creator: Function | None = None,
        name: str | None = None,
    ):
        target = np.dtype(dtype) if dtype is not None else get_default_dtype()
        if target not in _SUPPORTED:
            raise PrecisionError(f"unsupported precision {target}")
        array = np.array(data, dtype=target, copy=True)
        _check_finite(array, name or "tensor construction")
        self.data: np.ndarray = array
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.creator = creator
        self.name = name

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool, creator: Function | None) -> Tensor:
        # op outputs: already owned, typed and checked
        out = cls.__new__(cls)
        out.data = array
        out.requires_grad = requires_grad
        out.grad = None
        out.creator = creator
        out.name = None
        return out

    # --- basic properties -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise UsageError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> Tensor:
        return Tensor(self.data, requires_grad=False, dtype=self.dtype, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"

    # --- operator sugar (delegates to functional) -------------------------

    def _coerce(self, other: Any) -> Tensor:
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other), dtype=self.dtype)

    def __add__(self, other: Any) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.add(self, self._coerce(other))

    def __radd__(self, other: Any) -> Tensor:
        return self.__add__(other)

    def __sub__(self, other: Any) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.sub(self, self._coerce(other))

    def __rsub__(self, other: Any) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.add(F.neg(self), self._coerce(other))

    def __mul__(self, other: Any) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.mul(self, self._coerce(other))

    def __rmul__(self, other: Any) -> Tensor:
        return self.__mul__(other)

    def __neg__(self) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.matmul(self, other)

    def reshape(self, *shape: int) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def permute(self, *axes: int) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return F.permute(self, axes)

    def sum(self) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.sum_all(self)

    def mean(self) -> Tensor:
        from src.Core.Tools.Tensor import functional as F

        return F.mean_all(self)

    # --- autodiff ----------------------------------------------------------

    def backward(self) -> None:
        backward(self)


class Function:
    """A differentiable op. Subclasses implement ``forward`` and ``backward``.

    ``forward`` receives the input arrays; ``backward`` receives dL/d(output) and
    returns one gradient array (or None) per input tensor.
    """

    def __init__(self, *tensors: Tensor):
        self.tensors = tensors

    @abstractmethod
    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray: ...

    @abstractmethod
    def backward(self, grad: np.ndarray) -> Sequence[np.ndarray | None]: ...

    @classmethod
    def apply(cls, *tensors: Tensor, **kwargs: Any) -> Tensor:
        dtypes = {t.dtype for t in tensors}
        if len(dtypes) > 1:
            raise PrecisionError(f"{cls.__name__} got mixed precisions {sorted(str(d) for d in dtypes)}")
        func = cls(*tensors)
        out = func.forward(*(t.data for t in tensors), **kwargs)
        dtype = tensors[0].dtype if tensors else get_default_dtype()
        out = np.asarray(out, dtype=dtype)
        _check_finite(out, cls.__name__)
        requires_grad = any(t.requires_grad for t in tensors)
        return Tensor._wrap(out, requires_grad, func if requires_grad else None)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node.creator is not None:
            for parent in node.creator.tensors:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every tracked leaf reachable from scalar ``loss``.

    Leaf gradients accumulate across calls until cleared with ``zero_grad``.
    """
    if loss.size != 1:
        raise UsageError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node.creator is None:
            node.grad = grad.copy() if node.grad is None else node.grad + grad
            continue
        parent_grads = node.creator.backward(grad)
        for parent, parent_grad in zip(node.creator.tensors, parent_grads):
            if parent_grad is None or not parent.requires_grad:
                continue
            if parent_grad.shape != parent.shape:
                raise DimensionError(
                    f"{type(node.creator).__name__}.backward returned {parent_grad.shape} for input {parent.shape}"
                )
            key = id(parent)
            pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

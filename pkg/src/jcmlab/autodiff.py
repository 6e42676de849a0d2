"""Dense float64 tensors with dynamic reverse-mode automatic differentiation.

Each operation records its inputs and a backward closure on the output
tensor; the graph is rebuilt from scratch on every forward pass.
``Tensor.backward()`` topologically sorts the nodes below the loss and
applies each backward rule exactly once, in reverse order.

Every registered operation checks its output for NaN/Inf, so a numerical
blow-up surfaces at the op that produced it.  Broadcasting is deliberately
restricted: elementwise ops require identical shapes, except that ``add``
accepts a bias vector against the trailing axis of a matrix.  Python
scalars are accepted as constants by ``add``/``sub``/``mul``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

from .errors import DeterminismError, DimensionError, NonFiniteError

EPS_LOG = 1e-12      # floor for log arguments
EXP_CLAMP = 500.0    # exponent bound for exp and sigmoid inputs
SIGMOID_EPS = 1e-12  # nudge keeping sigmoid outputs inside the open interval (0, 1)


class Tensor:
    """A dense float64 array with an optional same-shape gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._op = "leaf"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        ``self`` must be scalar.  Nodes are visited in reverse topological
        order; each node's backward rule runs exactly once.
        """
        if self.data.size != 1:
            raise DimensionError(
                f"backward() requires a scalar tensor, got shape {self.shape}"
            )
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # Operator sugar; constants are allowed where the underlying op allows them.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op!r}, requires_grad={self.requires_grad})"


def _register(
    data: np.ndarray,
    parents: Sequence[Tensor],
    op: str,
    backward: Callable[[np.ndarray], None],
) -> Tensor:
    """Wrap an op result, check finiteness, and attach the backward rule."""
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"op '{op}' produced non-finite values")
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward
        out._op = op
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def add(a: Tensor, b) -> Tensor:
    """Elementwise sum.

    ``b`` may be a same-shape tensor, a bias vector broadcast over the
    batch (row) axis of a 2-D ``a``, or a Python scalar.
    """
    if not isinstance(b, Tensor):
        c = float(b)
        return _register(a.data + c, [a], "add", lambda g: _accumulate(a, g))
    if a.shape == b.shape:

        def backward(g):
            _accumulate(a, g)
            _accumulate(b, g)

        return _register(a.data + b.data, [a, b], "add", backward)
    if a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:

        def backward(g):
            _accumulate(a, g)
            _accumulate(b, g.sum(axis=0))

        return _register(a.data + b.data, [a, b], "add", backward)
    raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")


def sub(a: Tensor, b) -> Tensor:
    """Elementwise difference of same-shape tensors, or tensor minus scalar."""
    if not isinstance(b, Tensor):
        c = float(b)
        return _register(a.data - c, [a], "sub", lambda g: _accumulate(a, g))
    if a.shape != b.shape:
        raise DimensionError(f"sub: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        _accumulate(a, g)
        _accumulate(b, -g)

    return _register(a.data - b.data, [a, b], "sub", backward)


def neg(a: Tensor) -> Tensor:
    return _register(-a.data, [a], "neg", lambda g: _accumulate(a, -g))


def mul(a: Tensor, b) -> Tensor:
    """Elementwise product of same-shape tensors, or tensor times scalar."""
    if not isinstance(b, Tensor):
        c = float(b)
        return _register(a.data * c, [a], "mul", lambda g: _accumulate(a, g * c))
    if a.shape != b.shape:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    with np.errstate(over="ignore", invalid="ignore"):
        data = a.data * b.data
    return _register(data, [a, b], "mul", backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a 2-D (m, k) tensor and a 2-D (k, p) tensor."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(
            f"matmul requires 2-D operands, got {a.shape} and {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul: inner dimensions disagree, {a.shape} vs {b.shape}"
        )

    def backward(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _register(a.data @ b.data, [a, b], "matmul", backward)


def log(a: Tensor) -> Tensor:
    """Natural log with inputs floored at EPS_LOG; zero gradient below the floor."""
    clamped = np.maximum(a.data, EPS_LOG)
    inside = a.data >= EPS_LOG

    def backward(g):
        _accumulate(a, g * inside / clamped)

    return _register(np.log(clamped), [a], "log", backward)


def exp(a: Tensor) -> Tensor:
    """Elementwise exp with inputs clamped to +/- EXP_CLAMP."""
    clamped = np.clip(a.data, -EXP_CLAMP, EXP_CLAMP)
    out = np.exp(clamped)
    inside = np.abs(a.data) <= EXP_CLAMP

    def backward(g):
        _accumulate(a, g * inside * out)

    return _register(out, [a], "exp", backward)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask)

    return _register(np.maximum(a.data, 0.0), [a], "relu", backward)


def sigmoid(a: Tensor) -> Tensor:
    """Logistic function, saturation-safe.

    Inputs are clamped to +/- EXP_CLAMP before exponentiation and outputs
    nudged into [SIGMOID_EPS, 1 - SIGMOID_EPS] so downstream logs stay
    finite even for arbitrarily large inputs.
    """
    y = expit(np.clip(a.data, -EXP_CLAMP, EXP_CLAMP))
    y = np.clip(y, SIGMOID_EPS, 1.0 - SIGMOID_EPS)

    def backward(g):
        _accumulate(a, g * y * (1.0 - y))

    return _register(y, [a], "sigmoid", backward)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - y * y))

    return _register(y, [a], "tanh", backward)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax along ``axis`` with max-subtraction stabilization."""
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        _accumulate(a, (g - dot) * y)

    return _register(y, [a], "softmax", backward)


def tsum(a: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""

    def backward(g):
        _accumulate(a, np.broadcast_to(g, a.shape).copy())

    return _register(np.asarray(a.data.sum()), [a], "sum", backward)


def tmean(a: Tensor) -> Tensor:
    """Mean of all elements, as a scalar tensor."""
    n = a.data.size

    def backward(g):
        _accumulate(a, np.broadcast_to(g / n, a.shape).copy())

    return _register(np.asarray(a.data.mean()), [a], "mean", backward)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; the gradient is zero wherever the clamp is active."""
    inside = (a.data > lo) & (a.data < hi)

    def backward(g):
        _accumulate(a, g * inside)

    return _register(np.clip(a.data, lo, hi), [a], "clip", backward)


def powc(a: Tensor, exponent: float) -> Tensor:
    """Elementwise power with a constant exponent (positive base expected)."""
    out = a.data ** exponent

    def backward(g):
        _accumulate(a, g * exponent * a.data ** (exponent - 1.0))

    return _register(out, [a], "powc", backward)


def scale(a: Tensor, s: Tensor) -> Tensor:
    """Multiply a tensor by a scalar tensor (the one sanctioned scalar broadcast)."""
    if s.data.size != 1:
        raise DimensionError(f"scale factor must be scalar, got shape {s.shape}")

    def backward(g):
        _accumulate(a, g * s.data)
        _accumulate(s, np.asarray((g * a.data).sum()).reshape(s.shape))

    return _register(a.data * s.data, [a, s], "scale", backward)


def straight_through(a: Tensor, forward_values: np.ndarray, grad_gain: float, op: str) -> Tensor:
    """Emit ``forward_values`` but backpropagate ``grad_gain`` * upstream into ``a``.

    Used by the baseline quantizers, whose hard decisions would otherwise
    block the gradient.
    """
    if forward_values.shape != a.shape:
        raise DimensionError(
            f"straight_through: forward shape {forward_values.shape} != input {a.shape}"
        )

    def backward(g):
        _accumulate(a, g * grad_gain)

    return _register(np.asarray(forward_values, dtype=np.float64), [a], op, backward)


def finite_diff_check(
    f: Callable[[], Tensor],
    params: Iterable[Tensor],
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients of ``f()`` and central differences.

    ``f`` must be deterministic: it is evaluated twice up front and the two
    scalar values must agree bitwise, otherwise a DeterminismError is raised
    (frozen noise is the caller's job).  The relative error per parameter
    element is |analytic - numeric| / (|numeric| + 1e-12).
    """
    params = list(params)
    ref_a = f()
    ref_b = f()
    if ref_a.data.size != 1:
        raise DimensionError("finite_diff_check expects a scalar-valued computation")
    if not np.array_equal(ref_a.data, ref_b.data):
        raise DeterminismError(
            "objective returned differing values on repeated evaluation; "
            "freeze all noise sources before checking gradients"
        )
    for p in params:
        p.grad = None
    f().backward()
    analytic = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params
    ]
    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f().data)
            flat[i] = orig - h
            fm = float(f().data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            rel = abs(gflat[i] - numeric) / (abs(numeric) + 1e-12)
            worst = max(worst, rel)
    return worst

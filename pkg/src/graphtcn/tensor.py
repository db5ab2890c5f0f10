"""Dense float64 tensors with tape-based reverse-mode differentiation.

Everything numeric in the model runs through this module. Tensors wrap a
row-major float64 numpy array; each operation pairs a numpy forward pass
with a hand-written backward rule that is recorded on the active Tape
whenever an operand requires gradients. The op set is deliberately closed:
only what the model needs, no implicit broadcasting (a 0-d scalar operand
is the single exception in add/sub/mul).

Gradients accumulate into ``Tensor.grad`` buffers; callers zero them
explicitly between optimizer steps. Running ``backward`` twice on the same
tape without zeroing doubles every leaf gradient.
"""

from __future__ import annotations

import threading

import numpy as np

from .errors import ContractError, DomainError, NeighborhoodError, ShapeError


class Tensor:
    """A dense float64 array plus optional gradient buffer.

    Leaf tensors created with ``requires_grad=True`` get a zero gradient
    buffer immediately, so an untouched leaf reads as zero gradient after
    any backward pass. Tensors produced by operations start without a
    buffer; backward allocates one on demand.
    """

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        else:
            self.grad[...] = 0.0

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Small operator sugar over the module-level ops.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


class _Node:
    """One recorded operation: output reference plus its backward rule."""

    __slots__ = ("out", "backward")

    def __init__(self, out, backward):
        self.out = out
        self.backward = backward


class Tape:
    """Ordered record of operations for one forward pass.

    Nodes are appended in execution order, so every node's operands
    precede it and a single reverse sweep visits each node exactly once.
    Use as a context manager; ops record themselves only while a tape is
    active on the current thread.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _tape_stack().pop()
        return False


_LOCAL = threading.local()


def _tape_stack() -> list:
    stack = getattr(_LOCAL, "stack", None)
    if stack is None:
        stack = []
        _LOCAL.stack = stack
    return stack


def _active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _record(out: Tensor, inputs, backward_fn):
    """Mark ``out`` differentiable and push a node if a tape is active."""
    tape = _active_tape()
    if tape is None or not any(t.requires_grad for t in inputs):
        return
    out.requires_grad = True
    tape.nodes.append(_Node(out, backward_fn))


def backward(root: Tensor, tape: Tape):
    """Reverse sweep over ``tape``, seeding d(root)/d(root) = 1.

    Leaf gradients accumulate across calls; intermediate gradients are
    reset at the start of each sweep so a second call over the same tape
    adds one more full gradient to every leaf.
    """
    if root.data.size != 1:
        raise ContractError(f"backward root must be scalar, got shape {root.shape}")
    for node in tape.nodes:
        if node.out.grad is not None:
            node.out.grad[...] = 0.0
    if root.grad is None:
        root.grad = np.zeros_like(root.data)
    root.grad += 1.0
    for node in reversed(tape.nodes):
        g = node.out.grad
        if g is None:
            continue
        node.backward(g)


# ---------------------------------------------------------------------------
# Core operations


def affine(x, W, b=None) -> Tensor:
    """x @ W + b over the last axis of x; leading axes pass through."""
    x, W = _as_tensor(x), _as_tensor(W)
    if W.data.ndim != 2:
        raise ShapeError(f"affine weight must be 2-d, got {W.shape}")
    if x.data.ndim < 1 or x.data.shape[-1] != W.data.shape[0]:
        raise ShapeError(f"affine mismatch: x {x.shape} vs W {W.shape}")
    if b is not None:
        b = _as_tensor(b)
        if b.data.shape != (W.data.shape[1],):
            raise ShapeError(f"affine bias {b.shape} vs W {W.shape}")
    lead = x.data.shape[:-1]
    x2 = x.data.reshape(-1, x.data.shape[-1])
    out_data = x2 @ W.data
    if b is not None:
        out_data = out_data + b.data
    out = Tensor(out_data.reshape(lead + (W.data.shape[1],)))

    def bwd(g, x=x, W=W, b=b, x2=x2, lead=lead):
        g2 = g.reshape(-1, g.shape[-1])
        _accumulate(x, (g2 @ W.data.T).reshape(x.data.shape))
        _accumulate(W, x2.T @ g2)
        if b is not None:
            _accumulate(b, g2.sum(axis=0))

    _record(out, [x, W] + ([b] if b is not None else []), bwd)
    return out


def matmul(a, b) -> Tensor:
    """Plain 2-d matrix product."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.shape} vs {b.shape}")
    out = Tensor(a.data @ b.data)

    def bwd(g, a=a, b=b):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    _record(out, [a, b], bwd)
    return out


def _binary(kind, a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    a_scalar, b_scalar = a.data.ndim == 0, b.data.ndim == 0
    if a.data.shape != b.data.shape and not (a_scalar or b_scalar):
        raise ShapeError(f"{kind} mismatch: {a.shape} vs {b.shape}")
    if kind == "add":
        out_data = a.data + b.data
    elif kind == "sub":
        out_data = a.data - b.data
    else:
        out_data = a.data * b.data
    out = Tensor(out_data)

    def bwd(g, a=a, b=b, kind=kind):
        if kind == "add":
            ga, gb = g, g
        elif kind == "sub":
            ga, gb = g, -g
        else:
            ga, gb = g * b.data, g * a.data
        _accumulate(a, ga.sum() if a.data.ndim == 0 and g.ndim > 0 else ga)
        _accumulate(b, gb.sum() if b.data.ndim == 0 and g.ndim > 0 else gb)

    _record(out, [a, b], bwd)
    return out


def add(a, b) -> Tensor:
    return _binary("add", a, b)


def sub(a, b) -> Tensor:
    return _binary("sub", a, b)


def mul(a, b) -> Tensor:
    return _binary("mul", a, b)


def leaky_relu(x, slope: float = 0.2) -> Tensor:
    x = _as_tensor(x)
    out = Tensor(np.where(x.data >= 0.0, x.data, slope * x.data))

    def bwd(g, x=x, slope=slope):
        _accumulate(x, g * np.where(x.data >= 0.0, 1.0, slope))

    _record(out, [x], bwd)
    return out


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    y = np.tanh(x.data)
    out = Tensor(y)

    def bwd(g, x=x, y=y):
        _accumulate(x, g * (1.0 - y * y))

    _record(out, [x], bwd)
    return out


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    # Split by sign to avoid overflow in exp.
    d = x.data
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    out = Tensor(y)

    def bwd(g, x=x, y=y):
        _accumulate(x, g * y * (1.0 - y))

    _record(out, [x], bwd)
    return out


def exp(x) -> Tensor:
    x = _as_tensor(x)
    y = np.exp(x.data)
    out = Tensor(y)

    def bwd(g, x=x, y=y):
        _accumulate(x, g * y)

    _record(out, [x], bwd)
    return out


def log(x) -> Tensor:
    x = _as_tensor(x)
    bad = x.data <= 0.0
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"log of non-positive element at index {idx}")
    out = Tensor(np.log(x.data))

    def bwd(g, x=x):
        _accumulate(x, g / x.data)

    _record(out, [x], bwd)
    return out


def sqrt(x) -> Tensor:
    x = _as_tensor(x)
    bad = x.data < 0.0
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"sqrt of negative element at index {idx}")
    y = np.sqrt(x.data)
    out = Tensor(y)

    def bwd(g, x=x, y=y):
        _accumulate(x, g * 0.5 / y)

    _record(out, [x], bwd)
    return out


def concat(tensors, axis: int) -> Tensor:
    """Join tensors along ``axis``; all other extents must agree."""
    ts = [_as_tensor(t) for t in tensors]
    if not ts:
        raise ContractError("concat of an empty list")
    ndim = ts[0].data.ndim
    axis = _norm_axis(axis, ndim)
    for t in ts[1:]:
        if t.data.ndim != ndim:
            raise ShapeError(f"concat rank mismatch: {ts[0].shape} vs {t.shape}")
        for d in range(ndim):
            if d != axis and t.data.shape[d] != ts[0].data.shape[d]:
                raise ShapeError(f"concat extent mismatch: {ts[0].shape} vs {t.shape}")
    out = Tensor(np.concatenate([t.data for t in ts], axis=axis))

    def bwd(g, ts=ts, axis=axis):
        offset = 0
        for t in ts:
            n = t.data.shape[axis]
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + n)
            _accumulate(t, g[tuple(sl)])
            offset += n

    _record(out, ts, bwd)
    return out


def slice_axis(x, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice along one axis."""
    x = _as_tensor(x)
    axis = _norm_axis(axis, x.data.ndim)
    if not (0 <= start <= stop <= x.data.shape[axis]):
        raise ShapeError(f"slice [{start}:{stop}] out of range for axis {axis} of {x.shape}")
    sl = [slice(None)] * x.data.ndim
    sl[axis] = slice(start, stop)
    out = Tensor(x.data[tuple(sl)].copy())

    def bwd(g, x=x, sl=tuple(sl)):
        full = np.zeros_like(x.data)
        full[sl] = g
        _accumulate(x, full)

    _record(out, [x], bwd)
    return out


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    out = Tensor(x.data.reshape(shape))

    def bwd(g, x=x):
        _accumulate(x, g.reshape(x.data.shape))

    _record(out, [x], bwd)
    return out


def transpose(x, axes) -> Tensor:
    x = _as_tensor(x)
    axes = tuple(axes)
    if sorted(axes) != list(range(x.data.ndim)):
        raise ShapeError(f"transpose axes {axes} invalid for shape {x.shape}")
    out = Tensor(np.ascontiguousarray(x.data.transpose(axes)))
    inv = tuple(np.argsort(axes))

    def bwd(g, x=x, inv=inv):
        _accumulate(x, g.transpose(inv))

    _record(out, [x], bwd)
    return out


def repeat_axis(x, axis: int, times: int) -> Tensor:
    """Explicit broadcast: tile a unit extent along ``axis`` ``times`` over."""
    x = _as_tensor(x)
    axis = _norm_axis(axis, x.data.ndim)
    if x.data.shape[axis] != 1:
        raise ShapeError(f"repeat_axis needs extent 1 at axis {axis}, got {x.shape}")
    out = Tensor(np.repeat(x.data, times, axis=axis))

    def bwd(g, x=x, axis=axis):
        _accumulate(x, g.sum(axis=axis, keepdims=True))

    _record(out, [x], bwd)
    return out


def stack(tensors, axis: int = 0) -> Tensor:
    """Stack equal-shape tensors along a new axis (reshape + concat)."""
    ts = [_as_tensor(t) for t in tensors]
    expanded = [reshape(t, t.data.shape[:axis] + (1,) + t.data.shape[axis:]) for t in ts]
    if len(expanded) == 1:
        return expanded[0]
    return concat(expanded, axis=axis)


def masked_softmax(logits, mask) -> Tensor:
    """Row softmax over the last axis restricted to unmasked entries.

    Masked positions come out exactly 0. Rows are stabilized by
    subtracting the unmasked row maximum, so shifting a whole row by a
    constant leaves the output unchanged to rounding. A fully masked row
    is an error because it has no valid normalization.
    """
    x = _as_tensor(logits)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.data.shape:
        raise ShapeError(f"mask {mask.shape} vs logits {x.shape}")
    counts = mask.sum(axis=-1)
    if (counts == 0).any():
        row = tuple(int(i) for i in np.argwhere(counts == 0)[0])
        raise NeighborhoodError(f"fully masked row at index {row}")
    neg_inf = np.where(mask, x.data, -np.inf)
    rowmax = neg_inf.max(axis=-1, keepdims=True)
    e = np.exp(np.where(mask, x.data - rowmax, -np.inf))
    denom = e.sum(axis=-1, keepdims=True)
    y = e / denom
    out = Tensor(y)

    def bwd(g, x=x, y=y):
        inner = (g * y).sum(axis=-1, keepdims=True)
        _accumulate(x, y * (g - inner))

    _record(out, [x], bwd)
    return out


def conv1d_causal(x, W, b=None, dilation: int = 1) -> Tensor:
    """Causal 1-d convolution with left zero padding of (k-1)*dilation.

    ``x`` is [C_in, T] or batched [B, C_in, T]; ``W`` is [C_out, C_in, k].
    Output keeps the input length, and out[..., t] depends only on
    x[..., 0..t]: tap k-1 reads the current step, lower taps read the
    past.
    """
    x, W = _as_tensor(x), _as_tensor(W)
    if dilation < 1:
        raise ShapeError(f"dilation must be >= 1, got {dilation}")
    if W.data.ndim != 3:
        raise ShapeError(f"conv weight must be [C_out, C_in, k], got {W.shape}")
    batched = x.data.ndim == 3
    if x.data.ndim not in (2, 3):
        raise ShapeError(f"conv input must be [C_in, T] or [B, C_in, T], got {x.shape}")
    c_out, c_in, k = W.data.shape
    if x.data.shape[-2] != c_in:
        raise ShapeError(f"conv channel mismatch: x {x.shape} vs W {W.shape}")
    if b is not None:
        b = _as_tensor(b)
        if b.data.shape != (c_out,):
            raise ShapeError(f"conv bias {b.shape} vs W {W.shape}")
    t_len = x.data.shape[-1]
    pad = (k - 1) * dilation
    xb = x.data if batched else x.data[None]
    x_pad = np.pad(xb, ((0, 0), (0, 0), (pad, 0)))
    out_data = np.zeros((xb.shape[0], c_out, t_len))
    for tap in range(k):
        seg = x_pad[:, :, tap * dilation : tap * dilation + t_len]
        out_data += np.einsum("oc,bct->bot", W.data[:, :, tap], seg)
    if b is not None:
        out_data += b.data[None, :, None]
    out = Tensor(out_data if batched else out_data[0])

    def bwd(g, x=x, W=W, b=b, x_pad=x_pad, batched=batched, pad=pad,
            k=k, t_len=t_len, dilation=dilation):
        gb = g if batched else g[None]
        gx_pad = np.zeros_like(x_pad)
        gw = np.zeros_like(W.data)
        for tap in range(k):
            lo = tap * dilation
            seg = x_pad[:, :, lo : lo + t_len]
            gw[:, :, tap] = np.einsum("bot,bct->oc", gb, seg)
            gx_pad[:, :, lo : lo + t_len] += np.einsum("oc,bot->bct", W.data[:, :, tap], gb)
        gx = gx_pad[:, :, pad:]
        _accumulate(x, gx if batched else gx[0])
        _accumulate(W, gw)
        if b is not None:
            _accumulate(b, gb.sum(axis=(0, 2)))

    _record(out, [x, W] + ([b] if b is not None else []), bwd)
    return out


def reduce_sum(x, axis=None) -> Tensor:
    return _reduce("sum", x, axis)


def reduce_mean(x, axis=None) -> Tensor:
    return _reduce("mean", x, axis)


def reduce_min(x, axis=None) -> Tensor:
    """Minimum reduction; backward routes to the arg-min (lowest index on ties)."""
    return _reduce("min", x, axis)


def _reduce(kind, x, axis):
    x = _as_tensor(x)
    if x.data.size == 0:
        raise ShapeError(f"{kind} over empty tensor of shape {x.shape}")
    if axis is not None:
        axis = _norm_axis(axis, x.data.ndim)
    if kind == "sum":
        out_data = x.data.sum(axis=axis)
    elif kind == "mean":
        out_data = x.data.mean(axis=axis)
    else:
        out_data = x.data.min(axis=axis)
    out = Tensor(out_data)

    def bwd(g, x=x, axis=axis, kind=kind):
        if kind in ("sum", "mean"):
            scale = 1.0
            if kind == "mean":
                scale = 1.0 / (x.data.size if axis is None else x.data.shape[axis])
            if axis is None:
                _accumulate(x, np.full_like(x.data, float(g) * scale))
            else:
                _accumulate(x, np.expand_dims(g, axis) * scale * np.ones_like(x.data))
        else:
            gx = np.zeros_like(x.data)
            if axis is None:
                flat_idx = int(np.argmin(x.data.reshape(-1)))
                gx.reshape(-1)[flat_idx] = float(g)
            else:
                idx = np.argmin(x.data, axis=axis)
                np.put_along_axis(
                    gx, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis
                )
            _accumulate(x, gx)

    _record(out, [x], bwd)
    return out


def _norm_axis(axis: int, ndim: int) -> int:
    a = axis + ndim if axis < 0 else axis
    if not (0 <= a < ndim):
        raise ShapeError(f"axis {axis} out of range for rank {ndim}")
    return a


# ---------------------------------------------------------------------------
# Parameters and the finite-difference oracle


class ParameterStore:
    """Named, ordered, shaped learnable parameters; the checkpoint unit."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self._params:
            raise ContractError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(values, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grads(self):
        for t in self._params.values():
            t.zero_grad()

    def n_values(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        if set(arrays) != set(self._params):
            missing = set(self._params) - set(arrays)
            extra = set(arrays) - set(self._params)
            raise ContractError(f"parameter name mismatch: missing={sorted(missing)}, extra={sorted(extra)}")
        for name, t in self._params.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ShapeError(f"parameter {name!r}: stored {arr.shape} vs expected {t.data.shape}")
            t.data[...] = arr


def finite_difference_check(f, params: ParameterStore, h: float = 1e-5) -> float:
    """Compare tape gradients of a scalar function against central differences.

    ``f`` maps the store to a scalar Tensor and must be deterministic (any
    randomness drawn ahead of time and frozen). Returns the worst relative
    error |analytic - numeric| / max(1e-12, |analytic| + |numeric|) over
    every parameter element.
    """
    if h <= 0:
        raise ContractError(f"h must be positive, got {h}")
    with Tape() as tape:
        out = f(params)
        if out.data.size != 1:
            raise ContractError("finite_difference_check needs a scalar-valued f")
        params.zero_grads()
        backward(out, tape)
    if not np.isfinite(out.data).all():
        raise DomainError(f"non-finite objective value {out.data!r}")
    analytic = {name: t.grad.copy() for name, t in params.items()}

    worst = 0.0
    for name, t in params.items():
        flat = t.data.reshape(-1)
        aflat = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f(params).item()
            flat[i] = orig - h
            f_minus = f(params).item()
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise DomainError(f"non-finite objective while perturbing {name}[{i}]")
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = abs(aflat[i] - numeric) / max(1e-12, abs(aflat[i]) + abs(numeric))
            worst = max(worst, err)
    return worst

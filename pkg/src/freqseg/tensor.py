"""Dense f64 tensors with reverse-mode autodiff and real-signal FFT.

Every differentiable quantity in the pipeline is a ``Tensor`` wrapping a
row-major float64 ndarray.  Operations build a dynamic computation graph of
closures; ``backward`` on a scalar loss walks the graph in reverse
topological order and accumulates gradients into every ``requires_grad``
leaf.  Broadcasting follows numpy's trailing-dimension rules only.

Real-input FFTs use the "backward" normalization convention: the forward
transform is unscaled and the inverse carries the 1/T factor.  Spectra are
stored as half spectra of length S = T//2 + 1 (the redundant conjugate half
is implied by Hermitian symmetry of real signals).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, expit

from .errors import ContractError, NumericalError, ShapeError

_GRAD_ENABLED = True

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@contextmanager
def no_grad():
    """Disable graph construction inside the block (forward values only)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_backward", "_prev")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._backward = None
        self._prev = ()

    # -- basics ---------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return self.data.item()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def detach(self) -> "Tensor":
        """A view of the same values cut off from any graph."""
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # -- graph ----------------------------------------------------------

    def backward(self):
        """Accumulate d(self)/d(leaf) into every requires_grad leaf.

        Repeated calls keep accumulating unless grads are zeroed in
        between.  Raises ContractError for non-scalar targets.
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward requires a scalar, got shape {self.data.shape}"
            )
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._prev:
                if id(parent) not in visited:
                    stack.append((parent, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and node._backward is None:
                node.accumulate_grad(g)
            if node._backward is not None:
                for parent, pg in node._backward(g):
                    if id(parent) in grads:
                        grads[id(parent)] += pg
                    else:
                        # copy: closures may hand the same buffer (or a view)
                        # to several parents
                        grads[id(parent)] = np.array(pg)

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _track(*tensors) -> bool:
    return _GRAD_ENABLED and any(t.requires_grad for t in tensors)


def _make(data, parents, backward_fn, track: bool) -> Tensor:
    out = Tensor(data)
    if track:
        out.requires_grad = True
        out._prev = parents
        out._backward = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum-reduce a gradient back to the shape it was broadcast from."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise ----------------------------------------------------------


def _binary(a, b, fwd, da_fn, db_fn):
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = fwd(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}") from e
    track = _track(a, b)

    def backward(g):
        out = []
        if a.requires_grad or a._backward is not None:
            out.append((a, _unbroadcast(da_fn(g, a.data, b.data), a.shape)))
        if b.requires_grad or b._backward is not None:
            out.append((b, _unbroadcast(db_fn(g, a.data, b.data), b.shape)))
        return out

    return _make(data, (a, b), backward, track)


def add(a, b):
    return _binary(a, b, np.add, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b):
    return _binary(a, b, np.subtract, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b):
    return _binary(a, b, np.multiply, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a, b):
    return _binary(
        a, b, np.divide, lambda g, x, y: g / y, lambda g, x, y: -g * x / (y * y)
    )


def _unary(a, fwd, grad_fn):
    a = _as_tensor(a)
    data = fwd(a.data)
    track = _track(a)

    def backward(g):
        return [(a, grad_fn(g, a.data, data))]

    return _make(data, (a,), backward, track)


def neg(a):
    return _unary(a, np.negative, lambda g, x, y: -g)


def exp(a):
    return _unary(a, np.exp, lambda g, x, y: g * y)


def log(a):
    return _unary(a, np.log, lambda g, x, y: g / x)


def tanh(a):
    return _unary(a, np.tanh, lambda g, x, y: g * (1.0 - y * y))


def sigmoid(a):
    return _unary(a, expit, lambda g, x, y: g * y * (1.0 - y))


def relu(a):
    return _unary(
        a, lambda x: np.maximum(x, 0.0), lambda g, x, y: g * (x > 0.0)
    )


def gelu(a):
    """Exact Gaussian-error-linear unit, 0.5*x*(1 + erf(x/sqrt(2)))."""

    def grad(g, x, y):
        cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
        pdf = np.exp(-0.5 * x * x) * _INV_SQRT2PI
        return g * (cdf + x * pdf)

    return _unary(a, lambda x: 0.5 * x * (1.0 + erf(x * _INV_SQRT2)), grad)


def tabs(a):
    """|x| with the subgradient at 0 defined as 0."""
    return _unary(a, np.abs, lambda g, x, y: g * np.sign(x))


def sqrt(a):
    return _unary(a, np.sqrt, lambda g, x, y: g * 0.5 / y)


def clamp_min(a, floor: float):
    """max(x, floor); gradient is 1 above the floor, 0 at or below it."""
    return _unary(
        a,
        lambda x: np.maximum(x, floor),
        lambda g, x, y: g * (x > floor),
    )


def clamp_max(a, ceil: float):
    """min(x, ceil); gradient is 1 below the ceiling, 0 at or above it."""
    return _unary(
        a,
        lambda x: np.minimum(x, ceil),
        lambda g, x, y: g * (x < ceil),
    )


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "tanh": tanh,
    "log": log,
    "exp": exp,
    "abs": tabs,
    "relu": relu,
    "gelu": gelu,
    "sigmoid": sigmoid,
}


def elementwise(op_kind: str, a, b=None):
    """Dispatch by name; binary kinds require b, unary kinds forbid it."""
    fn = _ELEMENTWISE.get(op_kind)
    if fn is None:
        raise ContractError(f"unknown elementwise op {op_kind!r}")
    if op_kind in ("add", "sub", "mul", "div"):
        if b is None:
            raise ContractError(f"{op_kind} needs two operands")
        return fn(a, b)
    if b is not None:
        raise ContractError(f"{op_kind} takes one operand")
    return fn(a)


# -- contraction and structure --------------------------------------------


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul operands must have rank >= 2")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.shape} @ {b.shape}"
        )
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul broadcast failed: {a.shape} @ {b.shape}") from e
    track = _track(a, b)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return [
            (a, _unbroadcast(ga, a.shape)),
            (b, _unbroadcast(gb, b.shape)),
        ]

    return _make(data, (a, b), backward, track)


def tsum(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)
    track = _track(a)

    def backward(g):
        if axis is None:
            return [(a, np.broadcast_to(g, a.shape))]
        gg = g
        if not keepdims:
            gg = np.expand_dims(g, axis)
        return [(a, np.broadcast_to(gg, a.shape))]

    return _make(data, (a,), backward, track)


def tmean(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    if axis is None:
        n = a.size
    elif isinstance(axis, tuple):
        n = int(np.prod([a.shape[i] for i in axis]))
    else:
        n = a.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


def reshape(a, shape):
    a = _as_tensor(a)
    data = a.data.reshape(shape)
    track = _track(a)

    def backward(g):
        return [(a, g.reshape(a.shape))]

    return _make(data, (a,), backward, track)


def transpose(a, axes=None):
    a = _as_tensor(a)
    data = np.transpose(a.data, axes)
    track = _track(a)
    inv = None if axes is None else np.argsort(axes)

    def backward(g):
        return [(a, np.transpose(g, inv))]

    return _make(data, (a,), backward, track)


def concat(tensors, axis=0):
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    track = _track(*tensors)
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        pieces = np.split(g, splits, axis=axis)
        return list(zip(tensors, pieces))

    return _make(data, tuple(tensors), backward, track)


def narrow(a, axis: int, start: int, length: int):
    """Contiguous slice [start, start+length) along one axis."""
    a = _as_tensor(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    data = a.data[idx]
    track = _track(a)

    def backward(g):
        full = np.zeros(a.shape)
        full[idx] = g
        return [(a, full)]

    return _make(data, (a,), backward, track)


def pad(a, axis: int, before: int, after: int):
    """Zero-pad along one axis."""
    a = _as_tensor(a)
    widths = [(0, 0)] * a.ndim
    widths[axis] = (before, after)
    data = np.pad(a.data, widths)
    track = _track(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(before, before + a.shape[axis])
    idx = tuple(idx)

    def backward(g):
        return [(a, g[idx])]

    return _make(data, (a,), backward, track)


def take(a, indices, axis: int):
    """Gather along an axis with constant integer indices."""
    a = _as_tensor(a)
    indices = np.asarray(indices, dtype=np.intp)
    data = np.take(a.data, indices, axis=axis)
    track = _track(a)

    def backward(g):
        full = np.zeros(a.shape)
        moved = np.moveaxis(full, axis, 0)
        np.add.at(moved, indices, np.moveaxis(g, axis, 0))
        return [(a, full)]

    return _make(data, (a,), backward, track)


def adaptive_avg_pool(a, axis: int, out_len: int):
    """Adaptive average pooling: output bin i averages input indices
    [floor(i*T/out_len), ceil((i+1)*T/out_len))."""
    a = _as_tensor(a)
    t = a.shape[axis]
    starts = [(i * t) // out_len for i in range(out_len)]
    ends = [-(-((i + 1) * t) // out_len) for i in range(out_len)]
    src = np.moveaxis(a.data, axis, 0)
    data = np.stack(
        [src[s:e].mean(axis=0) for s, e in zip(starts, ends)], axis=0
    )
    data = np.moveaxis(data, 0, axis)
    track = _track(a)

    def backward(g):
        full = np.zeros(a.shape)
        dst = np.moveaxis(full, axis, 0)
        gsrc = np.moveaxis(g, axis, 0)
        for i, (s, e) in enumerate(zip(starts, ends)):
            dst[s:e] += gsrc[i] / (e - s)
        return [(a, full)]

    return _make(data, (a,), backward, track)


def softmax(a, axis: int):
    """Numerically stable softmax along one axis (constant max shift)."""
    a = _as_tensor(a)
    shift = a.data.max(axis=axis, keepdims=True)
    e = exp(sub(a, Tensor(shift)))
    return div(e, tsum(e, axis=axis, keepdims=True))


def stack(tensors, axis=0):
    expanded = []
    for t in tensors:
        t = _as_tensor(t)
        shape = list(t.shape)
        shape.insert(axis, 1)
        expanded.append(reshape(t, tuple(shape)))
    return concat(expanded, axis=axis)


# -- real-signal FFT --------------------------------------------------------


@dataclass
class ComplexSpectrum:
    """Half spectrum of a real signal: S = origin_length//2 + 1 bins.

    Bin k corresponds to physical frequency k * sample_rate / origin_length.
    """

    re: Tensor
    im: Tensor
    origin_length: int
    sample_rate: float = 1.0
    axis: int = -1

    @property
    def shape(self):
        return self.re.shape

    @property
    def num_bins(self) -> int:
        return self.re.shape[self.axis]

    def bin_frequency(self, k: int) -> float:
        return k * self.sample_rate / self.origin_length

    def scale(self, w) -> "ComplexSpectrum":
        """Multiply by a real (broadcastable) weight tensor per bin."""
        return ComplexSpectrum(
            mul(self.re, w), mul(self.im, w), self.origin_length,
            self.sample_rate, self.axis,
        )


def rfft(x, axis: int = -1, sample_rate: float = 1.0) -> ComplexSpectrum:
    """Unscaled forward DFT of a real signal, half-spectrum output."""
    x = _as_tensor(x)
    axis = axis % x.ndim
    t = x.shape[axis]
    spec = np.fft.rfft(x.data, axis=axis)
    track = _track(x)

    def backward_re(g):
        return [(x, _rfft_adjoint(g.astype(np.complex128), t, axis))]

    def backward_im(g):
        return [(x, _rfft_adjoint(1j * g, t, axis))]

    re = _make(spec.real, (x,), backward_re, track)
    im = _make(spec.imag, (x,), backward_im, track)
    return ComplexSpectrum(re, im, t, sample_rate, axis)


def irfft(sp: ComplexSpectrum, t: int) -> Tensor:
    """Inverse of :func:`rfft`; carries the 1/T normalization factor.

    The imaginary parts of the DC bin and (for even T) the Nyquist bin are
    ignored, matching the Hermitian half-spectrum convention.
    """
    if sp.origin_length != t:
        raise ShapeError(
            f"spectrum came from length {sp.origin_length}, requested {t}"
        )
    axis = sp.axis % sp.re.ndim
    s = sp.re.shape[axis]
    if s != t // 2 + 1:
        raise ShapeError(f"half spectrum of length {s} does not match T={t}")
    re, im = sp.re, sp.im
    data = np.fft.irfft(re.data + 1j * im.data, n=t, axis=axis)
    track = _track(re, im)

    def backward(g):
        spec_g = np.fft.rfft(g, axis=axis)
        shape = [1] * g.ndim
        shape[axis] = s
        c = np.full(s, 2.0)
        c[0] = 1.0
        if t % 2 == 0:
            c[-1] = 1.0
        spec_g = spec_g * (c.reshape(shape) / t)
        out = [(re, spec_g.real)]
        gim = spec_g.imag
        # forward ignores Im at DC / Nyquist; rfft of a real cotangent
        # already has exact zeros there, so gim needs no masking
        out.append((im, gim))
        return out

    return _make(data, (re, im), backward, track)


def _rfft_adjoint(g: np.ndarray, n: int, axis: int) -> np.ndarray:
    """Adjoint of the unscaled half-spectrum DFT for a complex cotangent."""
    shape = list(g.shape)
    shape[axis] = n
    full = np.zeros(shape, dtype=np.complex128)
    idx = [slice(None)] * g.ndim
    idx[axis] = slice(0, g.shape[axis])
    full[tuple(idx)] = g
    return np.real(np.fft.ifft(full, axis=axis)) * n


def amplitude(sp: ComplexSpectrum) -> Tensor:
    """Magnitude sqrt(re^2 + im^2) per bin; subgradient 0 at the origin."""
    re, im = sp.re, sp.im
    data = np.hypot(re.data, im.data)
    track = _track(re, im)

    def backward(g):
        safe = np.where(data > 0.0, data, 1.0)
        scale = np.where(data > 0.0, g / safe, 0.0)
        return [(re, scale * re.data), (im, scale * im.data)]

    return _make(data, (re, im), backward, track)


# -- gradient checking -------------------------------------------------------


@dataclass
class GradCheckReport:
    op_name: str
    max_rel_error: float
    per_parameter: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok in self.per_parameter)


def grad_check(
    f,
    params,
    h: float = 1e-5,
    tol: float = 1e-4,
    op_name: str = "f",
    rel_floor: float = 1e-6,
    max_coords: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare analytic gradients of ``f(params)`` with central differences.

    ``params`` is a list of (name, Tensor) pairs with requires_grad set.
    When ``max_coords`` is given, at most that many coordinates per
    parameter are checked (a seeded subset); every parameter is still
    covered.  The relative error per coordinate is
    |analytic - numeric| / max(|analytic|, |numeric|, rel_floor).
    """
    names = [n for n, _ in params]
    tensors = [p for _, p in params]
    for p in tensors:
        p.data = np.ascontiguousarray(p.data)
        p.zero_grad()
    loss = f(tensors)
    if not np.isfinite(loss.data).all():
        raise NumericalError(f"{op_name}: non-finite loss in grad_check")
    loss.backward()
    analytic = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.data)
        for p in tensors
    ]

    rng = np.random.default_rng(seed)
    report = GradCheckReport(op_name=op_name, max_rel_error=0.0)
    with no_grad():
        for name, p, a in zip(names, tensors, analytic):
            flat = p.data.reshape(-1)
            n = flat.size
            if max_coords is not None and n > max_coords:
                coords = rng.choice(n, size=max_coords, replace=False)
            else:
                coords = range(n)
            worst = 0.0
            for i in coords:
                orig = flat[i]
                flat[i] = orig + h
                fp = f(tensors).data.item()
                flat[i] = orig - h
                fm = f(tensors).data.item()
                flat[i] = orig
                numeric = (fp - fm) / (2.0 * h)
                if not (math.isfinite(fp) and math.isfinite(fm)):
                    raise NumericalError(
                        f"{op_name}: non-finite value at {name}[{i}]"
                    )
                ana = a.reshape(-1)[i]
                denom = max(abs(ana), abs(numeric), rel_floor)
                worst = max(worst, abs(ana - numeric) / denom)
            report.per_parameter.append((name, worst, worst <= tol))
            report.max_rel_error = max(report.max_rel_error, worst)
    return report

"""Minimal reverse-mode differentiation over real float64 numpy arrays.

A Tape records primitive operations during the forward pass; backward() replays
the records in reverse, accumulating cotangents additively across fan-out (the
same variable may feed several operations, e.g. a matrix and its transpose).
Constants are Vars without a tape: operations on constants alone evaluate
eagerly and record nothing, so the same model code serves both plain
prediction and differentiation.

A Tape is single-owner during a forward/backward pair; distinct tapes may be
used concurrently from different threads.
"""

import numpy as np


class ShapeError(ValueError):
    """Operand shapes incompatible with a primitive."""


class NonFiniteError(FloatingPointError):
    """A value or gradient became non-finite; the message names the primitive."""


class Var:
    """A tracked (or constant) float64 array node."""

    __slots__ = ("value", "tape", "index")

    def __init__(self, value, tape=None, index=None):
        value = np.asarray(value, dtype=np.float64)
        self.value = value
        self.tape = tape
        self.index = index

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        kind = "var" if self.tape is not None else "const"
        return f"Var({kind}, shape={self.value.shape})"


def constant(value):
    """Wrap an array as an untracked constant."""
    return Var(value)


class Tape:
    """Ordered record of primitives for one forward evaluation."""

    def __init__(self):
        self._nodes = []
        self._n_slots = 0

    def _new_slot(self):
        slot = self._n_slots
        self._n_slots += 1
        return slot

    def variable(self, value):
        """Create a tracked leaf variable on this tape."""
        return Var(value, self, self._new_slot())

    def backward(self, output, wrt):
        """Cotangents of a scalar output with respect to the given leaves.

        Gradients accumulate (sum) across fan-out.  Raises NonFiniteError
        naming the primitive whose cotangent is non-finite.
        """
        if output.tape is not self:
            raise ValueError("output does not belong to this tape")
        if output.value.size != 1:
            raise ShapeError(f"backward needs a scalar output, got shape {output.value.shape}")
        if not np.isfinite(output.value):
            raise NonFiniteError("loss value is non-finite")
        grads = {output.index: np.ones_like(output.value)}
        for name, out_index, parents, vjp in reversed(self._nodes):
            g = grads.pop(out_index, None)
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteError(f"non-finite gradient flowing out of '{name}'")
            for parent_index, cotangent in zip(parents, vjp(g)):
                if parent_index is None:
                    continue
                if parent_index in grads:
                    grads[parent_index] = grads[parent_index] + cotangent
                else:
                    grads[parent_index] = np.asarray(cotangent, dtype=np.float64)
        return [grads.get(v.index, np.zeros_like(v.value)) for v in wrt]


def _as_var(x):
    return x if isinstance(x, Var) else Var(x)


def _record(name, inputs, value, vjp):
    """Create the output Var, recording on the (unique) tape of the inputs."""
    tape = None
    for v in inputs:
        if v.tape is not None:
            if tape is not None and tape is not v.tape:
                raise ValueError(f"'{name}' mixes variables from two tapes")
            tape = v.tape
    if tape is None:
        return Var(value)
    out = Var(value, tape, tape._new_slot())
    tape._nodes.append((name, out.index, [v.index for v in inputs], vjp))
    return out


def _reduce_like(g, shape):
    """Sum a cotangent down to a broadcast operand's shape (scalar broadcasting only)."""
    if g.shape == tuple(shape):
        return g
    return np.sum(g).reshape(shape)


def _check_elementwise(name, a, b):
    if a.value.shape != b.value.shape and a.value.size != 1 and b.value.size != 1:
        raise ShapeError(f"'{name}' shapes {a.value.shape} and {b.value.shape} do not broadcast")


def add(a, b):
    a, b = _as_var(a), _as_var(b)
    _check_elementwise("add", a, b)
    return _record(
        "add", [a, b], a.value + b.value,
        lambda g: (_reduce_like(g, a.value.shape), _reduce_like(g, b.value.shape)),
    )


def sub(a, b):
    a, b = _as_var(a), _as_var(b)
    _check_elementwise("sub", a, b)
    return _record(
        "sub", [a, b], a.value - b.value,
        lambda g: (_reduce_like(g, a.value.shape), _reduce_like(-g, b.value.shape)),
    )


def mul(a, b):
    a, b = _as_var(a), _as_var(b)
    _check_elementwise("mul", a, b)
    av, bv = a.value, b.value
    return _record(
        "mul", [a, b], av * bv,
        lambda g: (_reduce_like(g * bv, av.shape), _reduce_like(g * av, bv.shape)),
    )


def div(a, b):
    a, b = _as_var(a), _as_var(b)
    _check_elementwise("div", a, b)
    av, bv = a.value, b.value
    return _record(
        "div", [a, b], av / bv,
        lambda g: (
            _reduce_like(g / bv, av.shape),
            _reduce_like(-g * av / (bv * bv), bv.shape),
        ),
    )


def scale(a, c):
    """Multiply by a python scalar constant."""
    a = _as_var(a)
    c = float(c)
    return _record("scale", [a], a.value * c, lambda g: (g * c,))


def matmul(a, b):
    """Matrix product with numpy @ semantics for 1-d and 2-d operands."""
    a, b = _as_var(a), _as_var(b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2):
        raise ShapeError(f"'matmul' supports 1-d/2-d operands, got {av.shape} @ {bv.shape}")
    if av.shape[-1] != (bv.shape[0] if bv.ndim >= 1 else None):
        raise ShapeError(f"'matmul' inner dimensions differ: {av.shape} @ {bv.shape}")
    value = av @ bv

    def vjp(g):
        if av.ndim == 2 and bv.ndim == 2:
            return g @ bv.T, av.T @ g
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return g @ bv.T, np.outer(av, g)
        return g * bv, g * av  # vector dot product, scalar g

    return _record("matmul", [a, b], value, vjp)


def tensordot(a, b, axes):
    """General contraction over named axis pairs, numpy.tensordot semantics."""
    a, b = _as_var(a), _as_var(b)
    ax_a, ax_b = [list(ax) for ax in axes]
    av, bv = a.value, b.value
    for i, j in zip(ax_a, ax_b):
        if av.shape[i] != bv.shape[j]:
            raise ShapeError(
                f"'tensordot' axis extents differ: {av.shape}[{i}] vs {bv.shape}[{j}]"
            )
    free_a = [i for i in range(av.ndim) if i not in ax_a]
    free_b = [j for j in range(bv.ndim) if j not in ax_b]
    value = np.tensordot(av, bv, axes=(ax_a, ax_b))

    def vjp(g):
        # grad_a: contract g's b-free axes with b's free axes, then permute the
        # surviving axes (a-free + a-contracted, the latter in ax_b-sorted
        # order) back to a's layout; symmetrically for grad_b.
        n_free_a = len(free_a)
        g_b_axes = list(range(n_free_a, n_free_a + len(free_b)))
        ga = np.tensordot(g, bv, axes=(g_b_axes, free_b))
        order_a = free_a + [ax_a[k] for k in np.argsort(ax_b, kind="stable")]
        ga = np.transpose(ga, np.argsort(order_a, kind="stable"))

        g_a_axes = list(range(n_free_a))
        gb = np.tensordot(av, g, axes=(free_a, g_a_axes))
        order_b = [ax_b[k] for k in np.argsort(ax_a, kind="stable")] + free_b
        gb = np.transpose(gb, np.argsort(order_b, kind="stable"))
        return ga, gb

    return _record("tensordot", [a, b], value, vjp)


def bond_contract(op, x):
    """Bond-channel-wise linear map: out[i, a] = sum_j op[j, i, a] * x[j, a].

    The bond index a is shared, not contracted; this is the contraction of a
    parameterized operator tensor with one factor of a low-rank state.
    """
    op, x = _as_var(op), _as_var(x)
    ov, xv = op.value, x.value
    if ov.ndim != 3 or xv.ndim != 2 or ov.shape[0] != xv.shape[0] or ov.shape[2] != xv.shape[1]:
        raise ShapeError(f"'bond_contract' shapes {ov.shape} and {xv.shape} incompatible")
    value = np.einsum("jia,ja->ia", ov, xv)

    def vjp(g):
        return (
            np.einsum("ia,ja->jia", g, xv),
            np.einsum("jia,ia->ja", ov, g),
        )

    return _record("bond_contract", [op, x], value, vjp)


def transpose(a, axes=None):
    a = _as_var(a)
    if axes is None:
        inv = None
    else:
        inv = tuple(np.argsort(axes))
    return _record(
        "transpose", [a], np.transpose(a.value, axes),
        lambda g: (np.transpose(g, inv),),
    )


def reshape(a, shape):
    a = _as_var(a)
    old = a.value.shape
    return _record("reshape", [a], a.value.reshape(shape), lambda g: (g.reshape(old),))


def concat(parts):
    """Concatenate 1-d variables."""
    parts = [_as_var(p) for p in parts]
    for p in parts:
        if p.value.ndim != 1:
            raise ShapeError(f"'concat' takes 1-d parts, got shape {p.value.shape}")
    sizes = [p.value.size for p in parts]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(g[offsets[i] : offsets[i + 1]] for i in range(len(parts)))

    return _record("concat", parts, np.concatenate([p.value for p in parts]), vjp)


def relu(a):
    """max(0, x); subgradient at 0 is 0."""
    a = _as_var(a)
    mask = a.value > 0
    return _record("relu", [a], np.where(mask, a.value, 0.0), lambda g: (g * mask,))


def sin(a):
    a = _as_var(a)
    c = np.cos(a.value)
    return _record("sin", [a], np.sin(a.value), lambda g: (g * c,))


def cos(a):
    a = _as_var(a)
    s = np.sin(a.value)
    return _record("cos", [a], np.cos(a.value), lambda g: (-g * s,))


def square(a):
    a = _as_var(a)
    av = a.value
    return _record("square", [a], av * av, lambda g: (2.0 * av * g,))


def exp(a):
    a = _as_var(a)
    ev = np.exp(a.value)
    return _record("exp", [a], ev, lambda g: (g * ev,))


def total(a):
    """Sum of all entries (scalar)."""
    a = _as_var(a)
    shape = a.value.shape
    return _record("sum", [a], np.sum(a.value), lambda g: (np.broadcast_to(g, shape).copy(),))


def logsumexp(a):
    """Stable log(sum(exp(x))) over all entries (scalar)."""
    a = _as_var(a)
    m = np.max(a.value)
    shifted = np.exp(a.value - m)
    s = np.sum(shifted)
    softmax = shifted / s
    return _record("logsumexp", [a], m + np.log(s), lambda g: (g * softmax,))


def lower_triangle(a, k=0):
    """Select the lower triangle at or below diagonal offset k, zero elsewhere."""
    a = _as_var(a)
    return _record("lower_triangle", [a], np.tril(a.value, k), lambda g: (np.tril(g, k),))


def kl_div(pred, log_target):
    """sum(pred * (log(pred) - log_target)) with 0 log 0 = 0.

    log_target is a plain (pre-floored, log-space) constant array.  Cells with
    pred exactly zero contribute nothing to the value or the gradient.
    """
    pred = _as_var(pred)
    log_target = np.asarray(log_target, dtype=np.float64)
    pv = pred.value
    if pv.shape != log_target.shape:
        raise ShapeError(f"'kl_div' shapes {pv.shape} and {log_target.shape} differ")
    if np.min(pv) < 0:
        raise ValueError(f"'kl_div' predictions must be nonnegative (min {np.min(pv):.3e})")
    mask = pv > 0
    log_ratio = np.zeros_like(pv)
    log_ratio[mask] = np.log(pv[mask]) - log_target[mask]
    value = np.sum(pv * log_ratio)

    def vjp(g):
        return (g * np.where(mask, log_ratio + 1.0, 0.0),)

    return _record("kl_div", [pred], value, vjp)


def value_and_grad(f, params):
    """Evaluate a scalar taped function and its gradient at parameter arrays.

    f receives one tracked Var per entry of params and must build its result
    from the primitives of this module.
    """
    tape = Tape()
    leaves = [tape.variable(p) for p in params]
    out = f(*leaves)
    if not isinstance(out, Var) or out.tape is not tape:
        raise ValueError("function did not return a Var built on the tape")
    return float(out.value), tape.backward(out, leaves)


def gradient(f, params):
    """Reverse-mode gradient of a scalar taped function; see value_and_grad."""
    return value_and_grad(f, params)[1]

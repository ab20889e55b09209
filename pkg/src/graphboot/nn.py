"""Differentiable building blocks with explicit backward passes.

The architecture is fixed and shallow (one graph convolution, two small
MLPs, a row normalization, a squared-error head), so each operation carries
a hand-derived adjoint instead of a general autodiff engine. Every forward
returns a tape of cached intermediates; the matching backward consumes the
tape exactly once and accumulates parameter gradients in place.

All math is double precision; the finite-difference harness in
:mod:`graphboot.gradcheck` validates every adjoint.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError
from .graph import PropagationMatrix, spmm
from .rng import RngState
from .sparse import SparseMatrix

ACTIVATIONS = ("prelu", "relu", "linear")


def glorot_init(rows: int, cols: int, rng: RngState) -> np.ndarray:
    """Uniform draws from [-a, a] with a = sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("glorot_init needs positive dimensions")
    a = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-a, a, size=(rows, cols))


class LinearLayer:
    """Affine map x -> x W + b with gradient buffers matching the parameters."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ValueError("weight must be (in, out) and bias (out,)")
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: RngState) -> "LinearLayer":
        return cls(glorot_init(in_dim, out_dim, rng), np.zeros(out_dim))

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]

    def copy(self) -> "LinearLayer":
        return LinearLayer(self.weight.copy(), self.bias.copy())

    def zero_grads(self) -> None:
        self.grad_weight[:] = 0.0
        self.grad_bias[:] = 0.0

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]

    def gradients(self):
        return [self.grad_weight, self.grad_bias]


class GcnEncoder:
    """One graph-convolution layer: H = act(P X W + b).

    The activation defaults to PReLU with one trainable slope per output
    channel; "linear" exists so oracle tests can exercise the layer without
    a nonlinearity.
    """

    def __init__(self, layer: LinearLayer, activation: str = "prelu", slope: np.ndarray | None = None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.layer = layer
        self.activation = activation
        if activation == "prelu":
            if slope is None:
                slope = np.full(layer.out_dim, 0.25)
            self.slope = np.asarray(slope, dtype=np.float64)
            if self.slope.shape != (layer.out_dim,):
                raise ValueError("prelu slope must have one entry per output channel")
            self.grad_slope = np.zeros_like(self.slope)
        else:
            self.slope = None
            self.grad_slope = None

    @classmethod
    def create(cls, in_dim: int, out_dim: int, rng: RngState, activation: str = "prelu") -> "GcnEncoder":
        return cls(LinearLayer.create(in_dim, out_dim, rng), activation=activation)

    @property
    def in_dim(self) -> int:
        return self.layer.in_dim

    @property
    def out_dim(self) -> int:
        return self.layer.out_dim

    def copy(self) -> "GcnEncoder":
        slope = None if self.slope is None else self.slope.copy()
        return GcnEncoder(self.layer.copy(), activation=self.activation, slope=slope)

    def zero_grads(self) -> None:
        self.layer.zero_grads()
        if self.grad_slope is not None:
            self.grad_slope[:] = 0.0

    def parameters(self):
        params = self.layer.parameters()
        if self.slope is not None:
            params = params + [("slope", self.slope)]
        return params

    def gradients(self):
        grads = self.layer.gradients()
        if self.grad_slope is not None:
            grads = grads + [self.grad_slope]
        return grads


class Mlp:
    """Two affine layers with an elementwise activation between them."""

    def __init__(self, hidden: LinearLayer, output: LinearLayer, activation: str = "relu"):
        if hidden.out_dim != output.in_dim:
            raise ValueError("hidden output width must match output input width")
        if activation not in ("relu", "linear"):
            raise ValueError(f"unsupported MLP activation {activation!r}")
        self.hidden = hidden
        self.output = output
        self.activation = activation

    @classmethod
    def create(cls, in_dim: int, hidden_dim: int, out_dim: int, rng: RngState) -> "Mlp":
        return cls(LinearLayer.create(in_dim, hidden_dim, rng), LinearLayer.create(hidden_dim, out_dim, rng))

    @property
    def in_dim(self) -> int:
        return self.hidden.in_dim

    @property
    def out_dim(self) -> int:
        return self.output.out_dim

    def copy(self) -> "Mlp":
        return Mlp(self.hidden.copy(), self.output.copy(), activation=self.activation)

    def zero_grads(self) -> None:
        self.hidden.zero_grads()
        self.output.zero_grads()

    def parameters(self):
        return [("hidden." + n, p) for n, p in self.hidden.parameters()] + [
            ("output." + n, p) for n, p in self.output.parameters()
        ]

    def gradients(self):
        return self.hidden.gradients() + self.output.gradients()


class _Tape:
    """Base for forward tapes; each may be consumed by backward only once."""

    __slots__ = ("consumed",)

    def __init__(self):
        self.consumed = False

    def consume(self):
        if self.consumed:
            raise RuntimeError("forward tape already consumed by a backward pass")
        self.consumed = True


class GcnTape(_Tape):
    __slots__ = ("propagation", "aggregated", "pre")

    def __init__(self, propagation, aggregated, pre):
        super().__init__()
        self.propagation = propagation
        self.aggregated = aggregated  # P X
        self.pre = pre


class MlpTape(_Tape):
    __slots__ = ("x", "pre_hidden", "hidden_out")

    def __init__(self, x, pre_hidden, hidden_out):
        super().__init__()
        self.x = x
        self.pre_hidden = pre_hidden
        self.hidden_out = hidden_out


class NormalizeTape(_Tape):
    __slots__ = ("norms", "normalized", "dead")

    def __init__(self, norms, normalized, dead=None):
        super().__init__()
        self.norms = norms
        self.normalized = normalized
        self.dead = dead


def _activation_forward(pre: np.ndarray, kind: str, slope: np.ndarray | None) -> np.ndarray:
    if kind == "linear":
        return pre
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return np.where(pre >= 0.0, pre, pre * slope[None, :])


def gcn_forward(
    p: PropagationMatrix,
    x: np.ndarray,
    enc: GcnEncoder,
    aggregated: np.ndarray | None = None,
) -> tuple[np.ndarray, GcnTape]:
    """Graph convolution forward: act(P X W + b).

    ``aggregated`` may supply a precomputed P X (the trainer shares it
    between the two towers that see the same view).
    """
    x = np.asarray(x, dtype=np.float64)
    if p.num_cols != x.shape[0]:
        raise ValueError(f"propagation {p.shape} does not match features {x.shape}")
    if x.shape[1] != enc.in_dim:
        raise ValueError(f"features have {x.shape[1]} columns, encoder expects {enc.in_dim}")
    ax = spmm(p, x) if aggregated is None else aggregated
    pre = ax @ enc.layer.weight
    pre += enc.layer.bias
    h = _activation_forward(pre, enc.activation, enc.slope)
    return h, GcnTape(propagation=p, aggregated=ax, pre=pre)


def gcn_backward(
    tape: GcnTape,
    grad_h: np.ndarray,
    enc: GcnEncoder,
    need_input_grad: bool = False,
) -> np.ndarray | None:
    """Adjoint of gcn_forward; accumulates into the encoder's grad buffers.

    Returns the gradient with respect to the input features when asked
    (training never needs it; the gradient check does).
    """
    tape.consume()
    grad_h = np.asarray(grad_h, dtype=np.float64)
    if grad_h.shape != tape.pre.shape:
        raise ValueError("grad_h shape mismatch")
    if enc.activation == "linear":
        grad_pre = grad_h
    elif enc.activation == "relu":
        grad_pre = grad_h * (tape.pre > 0.0)
    else:
        negative = tape.pre < 0.0
        grad_pre = grad_h * np.where(negative, enc.slope[None, :], 1.0)
        enc.grad_slope += np.where(negative, tape.pre * grad_h, 0.0).sum(axis=0)
    enc.layer.grad_weight += tape.aggregated.T @ grad_pre
    enc.layer.grad_bias += grad_pre.sum(axis=0)
    if not need_input_grad:
        return None
    back = grad_pre @ enc.layer.weight.T
    p = tape.propagation
    if isinstance(p.matrix, SparseMatrix):
        return (p.matrix.to_scipy().T @ back).astype(np.float64)
    return p.matrix.T @ back


def mlp_forward(x: np.ndarray, mlp: Mlp) -> tuple[np.ndarray, MlpTape]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != mlp.in_dim:
        raise ValueError(f"input has {x.shape[1]} columns, MLP expects {mlp.in_dim}")
    pre_hidden = x @ mlp.hidden.weight
    pre_hidden += mlp.hidden.bias
    hidden_out = _activation_forward(pre_hidden, mlp.activation, None)
    y = hidden_out @ mlp.output.weight
    y += mlp.output.bias
    return y, MlpTape(x=x, pre_hidden=pre_hidden, hidden_out=hidden_out)


def mlp_backward(tape: MlpTape, grad_y: np.ndarray, mlp: Mlp) -> np.ndarray:
    tape.consume()
    grad_y = np.asarray(grad_y, dtype=np.float64)
    mlp.output.grad_weight += tape.hidden_out.T @ grad_y
    mlp.output.grad_bias += grad_y.sum(axis=0)
    grad_hidden = grad_y @ mlp.output.weight.T
    if mlp.activation == "relu":
        grad_pre = grad_hidden * (tape.pre_hidden > 0.0)
    else:
        grad_pre = grad_hidden
    mlp.hidden.grad_weight += tape.x.T @ grad_pre
    mlp.hidden.grad_bias += grad_pre.sum(axis=0)
    return grad_pre @ mlp.hidden.weight.T


MIN_ROW_NORM = 1e-12


def l2_normalize_rows(z: np.ndarray, on_zero: str = "error") -> tuple[np.ndarray, NormalizeTape]:
    """Scale each row to unit Euclidean norm.

    A vanishing row norm usually means the representation collapsed, and the
    default is to report it as an error naming the row. The training loop
    instead passes ``on_zero="zero"``: under node dropout a node whose whole
    neighborhood was dropped legitimately has an all-zero embedding for that
    epoch; such rows stay zero and propagate no gradient.
    """
    if on_zero not in ("error", "zero"):
        raise ValueError(f"unknown on_zero mode {on_zero!r}")
    z = np.asarray(z, dtype=np.float64)
    norms = np.sqrt((z * z).sum(axis=1))
    dead = norms < MIN_ROW_NORM
    if np.any(dead):
        if on_zero == "error":
            bad = int(np.nonzero(dead)[0][0])
            raise NumericError(
                f"row {bad} has near-zero norm {norms[bad]:.3e}; representation collapsed"
            )
        safe = np.where(dead, 1.0, norms)
        normalized = z / safe[:, None]
        normalized[dead] = 0.0
        return normalized, NormalizeTape(norms=safe, normalized=normalized, dead=dead)
    normalized = z / norms[:, None]
    return normalized, NormalizeTape(norms=norms, normalized=normalized)


def l2_normalize_backward(tape: NormalizeTape, grad_out: np.ndarray) -> np.ndarray:
    """Jacobian-transpose product of row normalization: (g - (g.zhat) zhat) / |z|.

    Rows the forward pass zeroed out (``on_zero="zero"``) receive gradient 0.
    """
    tape.consume()
    grad_out = np.asarray(grad_out, dtype=np.float64)
    zhat = tape.normalized
    inner = (grad_out * zhat).sum(axis=1, keepdims=True)
    grad = (grad_out - inner * zhat) / tape.norms[:, None]
    if tape.dead is not None:
        grad[tape.dead] = 0.0
    return grad


def bootstrap_loss(q_norm: np.ndarray, z_norm: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared row difference between normalized prediction and target.

    The target side is a constant: no gradient flows to ``z_norm``. For unit
    rows the per-row value equals 2 - 2 cos(q, z), so it lies in [0, 4].
    """
    q_norm = np.asarray(q_norm, dtype=np.float64)
    z_norm = np.asarray(z_norm, dtype=np.float64)
    if q_norm.shape != z_norm.shape:
        raise ValueError(f"shape mismatch: {q_norm.shape} vs {z_norm.shape}")
    n = q_norm.shape[0]
    diff = q_norm - z_norm
    loss = float((diff * diff).sum() / n)
    grad_q = (2.0 / n) * diff
    return loss, grad_q


class AdamState:
    """Adam moments for an ordered list of parameter arrays."""

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps_hat: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps_hat = eps_hat
        self.step_count = 0
        self.first_moment = [np.zeros_like(p) for p in params]
        self.second_moment = [np.zeros_like(p) for p in params]


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """One bias-corrected Adam update, applied to the parameters in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params/grads/state length mismatch")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient; training diverged")
    state.step_count += 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1**state.step_count
    bias2 = 1.0 - b2**state.step_count
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps_hat)

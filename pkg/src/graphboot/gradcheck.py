"""Finite-difference validation of every hand-derived backward pass.

Each check builds a small random instance, reduces the operation's output
to a scalar through a fixed random weighting, and compares the analytic
gradient against central differences (step 1e-6, double precision). The
error metric is max absolute difference divided by max(1, largest gradient
magnitude). Instances whose pre-activations sit within 1e-4 of a kink are
redrawn, since finite differences are meaningless across a kink.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import evaluate as _evaluate
from . import nn as _nn
from .graph import normalize_adjacency
from .rng import RngState, make_rng
from .sparse import SparseMatrix

DEFAULT_TOLERANCE = 1e-5
_STEP = 1e-6
_KINK_MARGIN = 1e-4


@dataclass
class CheckResult:
    component: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def central_difference(f, x: np.ndarray, step: float = _STEP) -> np.ndarray:
    """Central finite differences of a scalar function over an array in place."""
    grad = np.zeros_like(x)
    flat = x.ravel()
    out = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f()
        flat[i] = orig - step
        down = f()
        flat[i] = orig
        out[i] = (up - down) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), 1.0)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def _random_propagation(rng: RngState, n: int):
    dense = (rng.random((n, n)) < 0.45).astype(np.float64)
    dense = np.triu(dense, k=1)
    # chain fallback keeps every node connected
    for i in range(n - 1):
        dense[i, i + 1] = 1.0
    dense = dense + dense.T
    return normalize_adjacency(SparseMatrix.from_dense(dense))


def check_gcn(rng: RngState, n: int = 12, d: int = 7, out_dim: int = 5, activation: str = "prelu") -> float:
    p = _random_propagation(rng, n)
    for _ in range(64):
        x = rng.normal(size=(n, d))
        enc = _nn.GcnEncoder.create(d, out_dim, rng, activation=activation)
        if enc.slope is not None:
            enc.slope[:] = rng.uniform(0.1, 0.6, size=out_dim)
        enc.layer.bias[:] = rng.normal(scale=0.3, size=out_dim)
        h, tape = _nn.gcn_forward(p, x, enc)
        if activation == "linear" or np.abs(tape.pre).min() > _KINK_MARGIN:
            break
    else:
        raise RuntimeError("could not draw a kink-free GCN instance")
    weighting = rng.normal(size=h.shape)

    def scalar() -> float:
        out, _ = _nn.gcn_forward(p, x, enc)
        return float((out * weighting).sum())

    enc.zero_grads()
    _, tape = _nn.gcn_forward(p, x, enc)
    grad_x = _nn.gcn_backward(tape, weighting, enc, need_input_grad=True)

    errs = [
        relative_error(enc.layer.grad_weight, central_difference(scalar, enc.layer.weight)),
        relative_error(enc.layer.grad_bias, central_difference(scalar, enc.layer.bias)),
        relative_error(grad_x, central_difference(scalar, x)),
    ]
    if enc.slope is not None:
        errs.append(relative_error(enc.grad_slope, central_difference(scalar, enc.slope)))
    return max(errs)


def check_mlp(rng: RngState, n: int = 9, in_dim: int = 6, hidden_dim: int = 8, out_dim: int = 4) -> float:
    for _ in range(64):
        x = rng.normal(size=(n, in_dim))
        mlp = _nn.Mlp.create(in_dim, hidden_dim, out_dim, rng)
        mlp.hidden.bias[:] = rng.normal(scale=0.3, size=hidden_dim)
        mlp.output.bias[:] = rng.normal(scale=0.3, size=out_dim)
        y, tape = _nn.mlp_forward(x, mlp)
        if np.abs(tape.pre_hidden).min() > _KINK_MARGIN:
            break
    else:
        raise RuntimeError("could not draw a kink-free MLP instance")
    weighting = rng.normal(size=y.shape)

    def scalar() -> float:
        out, _ = _nn.mlp_forward(x, mlp)
        return float((out * weighting).sum())

    mlp.zero_grads()
    _, tape = _nn.mlp_forward(x, mlp)
    grad_x = _nn.mlp_backward(tape, weighting, mlp)

    numeric = [
        central_difference(scalar, mlp.hidden.weight),
        central_difference(scalar, mlp.hidden.bias),
        central_difference(scalar, mlp.output.weight),
        central_difference(scalar, mlp.output.bias),
        central_difference(scalar, x),
    ]
    analytic = mlp.gradients() + [grad_x]
    return max(relative_error(a, n_) for a, n_ in zip(analytic, numeric))


def check_l2_normalize(rng: RngState, n: int = 10, dim: int = 6) -> float:
    while True:
        z = rng.normal(size=(n, dim))
        if np.sqrt((z * z).sum(axis=1)).min() > 0.1:
            break
    weighting = rng.normal(size=z.shape)

    def scalar() -> float:
        out, _ = _nn.l2_normalize_rows(z)
        return float((out * weighting).sum())

    _, tape = _nn.l2_normalize_rows(z)
    grad_z = _nn.l2_normalize_backward(tape, weighting)
    return relative_error(grad_z, central_difference(scalar, z))


def check_bootstrap_loss(rng: RngState, n: int = 10, dim: int = 6) -> float:
    q = rng.normal(size=(n, dim))
    q /= np.sqrt((q * q).sum(axis=1))[:, None]
    z = rng.normal(size=(n, dim))
    z /= np.sqrt((z * z).sum(axis=1))[:, None]

    def scalar() -> float:
        loss, _ = _nn.bootstrap_loss(q, z)
        return loss

    _, grad_q = _nn.bootstrap_loss(q, z)
    return relative_error(grad_q, central_difference(scalar, q))


def check_probe_cross_entropy(rng: RngState, n: int = 14, dim: int = 5, classes: int = 3) -> float:
    h = rng.normal(size=(n, dim))
    y = rng.integers(0, classes, size=n)
    w = rng.normal(scale=0.4, size=(dim, classes))
    b = rng.normal(scale=0.2, size=classes)
    penalty = 1e-3

    def scalar() -> float:
        loss, _, _ = _evaluate.cross_entropy_loss_and_grads(w, b, h, y, penalty)
        return loss

    _, grad_w, grad_b = _evaluate.cross_entropy_loss_and_grads(w, b, h, y, penalty)
    return max(
        relative_error(grad_w, central_difference(scalar, w)),
        relative_error(grad_b, central_difference(scalar, b)),
    )


def _components(n: int, d: int):
    return {
        "gcn_prelu": lambda rng: check_gcn(rng, n=n, d=d, activation="prelu"),
        "gcn_relu": lambda rng: check_gcn(rng, n=n, d=d, activation="relu"),
        "projection_mlp": lambda rng: check_mlp(rng),
        "prediction_mlp": lambda rng: check_mlp(rng, n=8, in_dim=5, hidden_dim=10, out_dim=5),
        "l2_normalize": check_l2_normalize,
        "bootstrap_loss": check_bootstrap_loss,
        "probe_cross_entropy": check_probe_cross_entropy,
    }


def run_all(
    seed: int = 0,
    instances: int = 20,
    tolerance: float = DEFAULT_TOLERANCE,
    nodes: int = 12,
    dim: int = 7,
) -> list[CheckResult]:
    """Run every component check on ``instances`` random instances.

    ``nodes``/``dim`` size the graph-convolution instances. Returns one
    result per component carrying the worst error observed.
    """
    results = []
    for name, check in _components(nodes, dim).items():
        rng = make_rng(hash((name, seed)) & 0x7FFFFFFF)
        worst = 0.0
        for _ in range(instances):
            worst = max(worst, check(rng))
        results.append(CheckResult(component=name, max_rel_error=worst, tolerance=tolerance))
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        status = "pass" if r.passed else "FAIL"
        lines.append(f"{status}  {r.component:<22} max_rel_error={r.max_rel_error:.3e}  (tol {r.tolerance:g})")
    return "\n".join(lines)


def run_timed(
    seed: int = 0,
    instances: int = 20,
    tolerance: float = DEFAULT_TOLERANCE,
    nodes: int = 12,
    dim: int = 7,
):
    start = time.perf_counter()
    results = run_all(seed=seed, instances=instances, tolerance=tolerance, nodes=nodes, dim=dim)
    return results, time.perf_counter() - start

"""The bootstrapped training loop.

Two stochastic views of the graph feed two towers. The online tower
(encoder, projector, predictor) is trained by gradient descent to regress
the target tower's projections; the target tower (encoder, projector) is
updated only as an exponential moving average of the online parameters,
once per epoch, after the optimizer step. The loss is symmetrized by
swapping which view feeds which tower.

Only the online encoder survives training; downstream tasks embed the
un-augmented graph with it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AdjacencyAugmentation, NodeAugmentation, ViewConfig, make_view
from .checkpoint import save_encoder
from .errors import NumericError
from .graph import (
    Graph,
    LabeledDataset,
    normalize_adjacency,
    row_normalize_features,
    spmm,
)
from .nn import (
    AdamState,
    GcnEncoder,
    Mlp,
    adam_step,
    bootstrap_loss,
    gcn_backward,
    gcn_forward,
    l2_normalize_backward,
    l2_normalize_rows,
    mlp_backward,
    mlp_forward,
)
from .rng import RngState, spawn


def _default_view1() -> ViewConfig:
    return ViewConfig(
        node=NodeAugmentation(kind="node_feature_dropout", rate=0.5),
        adjacency=AdjacencyAugmentation(kind="normalized_adjacency"),
    )


def _default_view2() -> ViewConfig:
    return ViewConfig(
        node=NodeAugmentation(kind="node_dropout", rate=0.5),
        adjacency=AdjacencyAugmentation(kind="ppr"),
    )


@dataclass
class TrainConfig:
    epochs: int = 500
    lr: float = 0.001
    decay_p: float = 0.99
    embed_dim: int = 512
    mlp_hidden: int | None = None  # None -> 2 * embed_dim
    activation: str = "prelu"
    use_projector: bool = True
    view1: ViewConfig = field(default_factory=_default_view1)
    view2: ViewConfig = field(default_factory=_default_view2)
    seed: int = 0
    checkpoint_every: int = 0
    early_stop: bool = True
    early_stop_patience: int = 50
    early_stop_rel_improvement: float = 1e-4

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not (0.0 <= self.decay_p <= 1.0):
            raise ValueError("decay_p must lie in [0, 1]")
        if self.lr < 0.0:
            raise ValueError("lr must be non-negative")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be at least 1")

    @property
    def hidden_dim(self) -> int:
        return self.mlp_hidden if self.mlp_hidden is not None else 2 * self.embed_dim


@dataclass
class TrainReport:
    losses: list[float]
    wall_clock: list[float]
    checkpoint_path: str | None
    epochs_run: int


@dataclass
class DgbModel:
    """Online tower (encoder, projector, predictor) plus its EMA target twin."""

    online_encoder: GcnEncoder
    online_projector: Mlp | None
    online_predictor: Mlp
    target_encoder: GcnEncoder
    target_projector: Mlp | None

    def __post_init__(self):
        if (self.online_projector is None) != (self.target_projector is None):
            raise ValueError("online and target towers must agree on having a projector")
        for t, o in zip(self.target_parameters(), self._online_mirrored()):
            if t.shape != o.shape:
                raise ValueError("target tower shapes must mirror the online encoder+projector")

    def _online_mirrored(self) -> list[np.ndarray]:
        params = [p for _, p in self.online_encoder.parameters()]
        if self.online_projector is not None:
            params += [p for _, p in self.online_projector.parameters()]
        return params

    def online_parameters(self) -> list[np.ndarray]:
        params = self._online_mirrored()
        return params + [p for _, p in self.online_predictor.parameters()]

    def online_gradients(self) -> list[np.ndarray]:
        grads = self.online_encoder.gradients()
        if self.online_projector is not None:
            grads += self.online_projector.gradients()
        return grads + self.online_predictor.gradients()

    def target_parameters(self) -> list[np.ndarray]:
        params = [p for _, p in self.target_encoder.parameters()]
        if self.target_projector is not None:
            params += [p for _, p in self.target_projector.parameters()]
        return params

    def zero_grads(self) -> None:
        self.online_encoder.zero_grads()
        if self.online_projector is not None:
            self.online_projector.zero_grads()
        self.online_predictor.zero_grads()


def init_model(config: TrainConfig, num_features: int, rng: RngState) -> DgbModel:
    """Glorot-initialize the online tower; the target starts as an exact copy."""
    d = config.embed_dim
    hidden = config.hidden_dim
    encoder = GcnEncoder.create(num_features, d, rng, activation=config.activation)
    projector = Mlp.create(d, hidden, d, rng) if config.use_projector else None
    predictor = Mlp.create(d, hidden, d, rng)
    return DgbModel(
        online_encoder=encoder,
        online_projector=projector,
        online_predictor=predictor,
        target_encoder=encoder.copy(),
        target_projector=projector.copy() if projector is not None else None,
    )


def ema_update(model: DgbModel, p: float) -> None:
    """Move every target parameter toward its online twin: t <- p t + (1-p) o.

    The predictor has no target counterpart and is untouched. p = 1 is a
    bit-exact no-op; p = 0 copies the online parameters outright.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError("decay rate must lie in [0, 1]")
    if p == 1.0:
        return
    for target, online in zip(model.target_parameters(), model._online_mirrored()):
        if p == 0.0:
            target[:] = online
        else:
            target *= p
            target += (1.0 - p) * online


def _tower_forward(x, propagation, aggregated, encoder, projector, predictor):
    """Forward one tower; returns output plus the tapes needed to backprop."""
    h, enc_tape = gcn_forward(propagation, x, encoder, aggregated=aggregated)
    if projector is not None:
        z, proj_tape = mlp_forward(h, projector)
    else:
        z, proj_tape = h, None
    if predictor is None:
        return z, (enc_tape, proj_tape, None)
    q, pred_tape = mlp_forward(z, predictor)
    return q, (enc_tape, proj_tape, pred_tape)


def _direction_pass(model: DgbModel, online_view, target_view, with_grad: bool = True) -> float:
    """One direction of the symmetrized objective.

    The online tower sees ``online_view`` and is backpropagated; the target
    tower sees ``target_view`` and contributes a constant (stop-gradient).
    """
    x_on, p_on, ax_on = online_view
    x_tg, p_tg, ax_tg = target_view

    q, (enc_tape, proj_tape, pred_tape) = _tower_forward(
        x_on, p_on, ax_on, model.online_encoder, model.online_projector, model.online_predictor
    )
    # zero rows (a node whose whole neighborhood was dropped) normalize to
    # zero and carry no gradient instead of aborting the epoch
    q_norm, norm_tape = l2_normalize_rows(q, on_zero="zero")

    z, _ = _tower_forward(
        x_tg, p_tg, ax_tg, model.target_encoder, model.target_projector, None
    )
    z_norm, _ = l2_normalize_rows(z, on_zero="zero")

    loss, grad_q = bootstrap_loss(q_norm, z_norm)
    if with_grad:
        g = l2_normalize_backward(norm_tape, grad_q)
        g = mlp_backward(pred_tape, g, model.online_predictor)
        if proj_tape is not None:
            g = mlp_backward(proj_tape, g, model.online_projector)
        gcn_backward(enc_tape, g, model.online_encoder)
    return loss


def two_view_losses(model: DgbModel, view1, view2) -> tuple[float, float]:
    """Both loss terms for fixed, pre-sampled views; no gradients touched.

    ``view1``/``view2`` are (features, propagation) pairs. Swapping the
    views swaps the two terms, so their sum is symmetric by construction.
    """
    x1, p1 = view1
    x2, p2 = view2
    v1 = (x1, p1, None)
    v2 = (x2, p2, None)
    forward = _direction_pass(model, v1, v2, with_grad=False)
    backward = _direction_pass(model, v2, v1, with_grad=False)
    return forward, backward


def train_epoch(
    model: DgbModel,
    graph: Graph,
    config: TrainConfig,
    rng: RngState,
    opt: AdamState,
    propagation_cache: dict | None = None,
) -> float:
    """One full pass: sample views, symmetrized loss, Adam step, EMA update."""
    x1, p1 = make_view(graph, config.view1, rng, propagation_cache)
    x2, p2 = make_view(graph, config.view2, rng, propagation_cache)
    # each aggregated view feeds one online and one target encoder
    ax1 = spmm(p1, x1)
    ax2 = spmm(p2, x2)
    view1 = (x1, p1, ax1)
    view2 = (x2, p2, ax2)

    model.zero_grads()
    loss = _direction_pass(model, view1, view2)
    loss += _direction_pass(model, view2, view1)
    if not math.isfinite(loss):
        raise NumericError("non-finite training loss")
    adam_step(model.online_parameters(), model.online_gradients(), opt)
    ema_update(model, config.decay_p)
    return loss


def train(
    dataset: LabeledDataset,
    config: TrainConfig,
    checkpoint_path: str | None = None,
    checkpoint_meta: dict | None = None,
) -> tuple[GcnEncoder, TrainReport]:
    """Run the full bootstrapping loop and return the online encoder.

    Deterministic for a fixed seed and thread count. Stops early when the
    best loss has not improved by a relative margin within the patience
    window.
    """
    graph = replace(
        dataset.graph, features=row_normalize_features(dataset.graph.features)
    )
    init_rng, aug_rng = spawn(config.seed, 2)
    model = init_model(config, graph.num_features, init_rng)
    opt = AdamState(model.online_parameters(), lr=config.lr)
    cache: dict = {}

    losses: list[float] = []
    wall: list[float] = []
    best = math.inf
    best_epoch = 0
    epochs_run = 0
    for epoch in range(config.epochs):
        start = time.perf_counter()
        try:
            loss = train_epoch(model, graph, config, aug_rng, opt, cache)
        except NumericError as e:
            raise NumericError(f"epoch {epoch}: {e}") from e
        wall.append(time.perf_counter() - start)
        losses.append(loss)
        epochs_run = epoch + 1
        if (
            checkpoint_path is not None
            and config.checkpoint_every > 0
            and epochs_run % config.checkpoint_every == 0
        ):
            save_encoder(
                _epoch_checkpoint_path(checkpoint_path, epochs_run),
                model.online_encoder,
                meta=checkpoint_meta,
            )
        if loss < best * (1.0 - config.early_stop_rel_improvement) or not math.isfinite(best):
            best = loss
            best_epoch = epoch
        elif config.early_stop and epoch - best_epoch >= config.early_stop_patience:
            break

    if checkpoint_path is not None:
        save_encoder(checkpoint_path, model.online_encoder, meta=checkpoint_meta)
    report = TrainReport(
        losses=losses,
        wall_clock=wall,
        checkpoint_path=checkpoint_path,
        epochs_run=epochs_run,
    )
    return model.online_encoder, report


def _epoch_checkpoint_path(path: str, epoch: int) -> str:
    if path.endswith(".ckpt"):
        return f"{path[:-5]}.epoch{epoch}.ckpt"
    return f"{path}.epoch{epoch}"


def embed(encoder: GcnEncoder, graph: Graph) -> np.ndarray:
    """Inference-time representations: no augmentation, raw graph.

    Feeds the row-normalized features through the encoder with the
    normalized adjacency. Deterministic; calling twice gives identical
    output.
    """
    propagation = normalize_adjacency(graph.adjacency)
    features = row_normalize_features(graph.features)
    h, _ = gcn_forward(propagation, features, encoder)
    return h

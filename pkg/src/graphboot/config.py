"""Experiment configuration: YAML files, defaults, fingerprints.

One YAML file drives every command. Keys mirror the dataclasses in
:mod:`trainer`, :mod:`evaluate` and :mod:`augment`; view augmentations can
be spelled either as nested mappings or with the compact labels used in
result tables ("NFD+ADJ & ND+DIFF"). ``graphboot --print-defaults`` prints
the full default file, so every otherwise-implicit hyperparameter is
visible.

Fingerprints are sha256 over the canonical JSON encoding of the semantic
fields, so they are stable under key reordering and file formatting.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import yaml

from .augment import AdjacencyAugmentation, NodeAugmentation, ViewConfig
from .errors import UsageError
from .evaluate import EvalConfig
from .trainer import TrainConfig

_NODE_ALIASES = {
    "in": "identity",
    "identity": "identity",
    "nd": "node_dropout",
    "node_dropout": "node_dropout",
    "nfd": "node_feature_dropout",
    "node_feature_dropout": "node_feature_dropout",
}
_ADJ_ALIASES = {
    "adj": "normalized_adjacency",
    "normalized_adjacency": "normalized_adjacency",
    "ppr": "ppr",
    "heat": "heat",
}


@dataclass
class SweepConfig:
    """Dropout-rate selection: rates 0.1..0.9, best by validation accuracy."""

    enabled: bool = True
    rates: list[float] = field(default_factory=lambda: [round(0.1 * k, 1) for k in range(1, 10)])
    epochs: int | None = None  # None -> the ablation epochs
    seed: int = 0
    eval_runs: int = 3


@dataclass
class AblateConfig:
    pairs: list[str] = field(
        default_factory=lambda: [
            "IN+ADJ & IN+ADJ",
            "NFD+ADJ & ND+ADJ",
            "IN+DIFF & IN+ADJ",
            "NFD+ADJ & ND+DIFF",
        ]
    )
    include_projection_ablation: bool = True
    decay_values: list[float] = field(default_factory=lambda: [0.0, 1.0])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    epochs: int | None = None  # None -> train.epochs
    eval_runs: int = 10
    diffusion: str = "ppr"  # what the DIFF label means; "both" runs ppr and heat cells
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def __post_init__(self):
        if self.diffusion not in ("ppr", "heat", "both"):
            raise UsageError("ablate.diffusion must be 'ppr', 'heat' or 'both'")


@dataclass
class ExperimentConfig:
    dataset: str = "data/cora"
    output_dir: str = "runs/default"
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)


def parse_view_label(label: str, base: ViewConfig, diffusion_kind: str = "ppr") -> ViewConfig:
    """Turn a compact view label like "NFD+ADJ" into a ViewConfig.

    Node tokens: IN, NFD, ND. Adjacency tokens: ADJ, DIFF, PPR, HEAT (DIFF
    resolves to ``diffusion_kind``). Rates and diffusion hyperparameters are
    inherited from ``base``. A bare node token implies ADJ.
    """
    node = NodeAugmentation(kind="identity", rate=0.0)
    adjacency = replace(base.adjacency, kind="normalized_adjacency")
    for token in label.split("+"):
        token = token.strip().lower()
        if not token:
            raise UsageError(f"empty token in view label {label!r}")
        if token in _NODE_ALIASES:
            kind = _NODE_ALIASES[token]
            rate = 0.0 if kind == "identity" else base.node.rate
            node = NodeAugmentation(kind=kind, rate=rate)
        elif token in _ADJ_ALIASES:
            adjacency = replace(base.adjacency, kind=_ADJ_ALIASES[token])
        elif token == "diff":
            adjacency = replace(base.adjacency, kind=diffusion_kind)
        else:
            raise UsageError(f"unknown token {token!r} in view label {label!r}")
    return ViewConfig(node=node, adjacency=adjacency)


def parse_pair_label(label: str, view1_base: ViewConfig, view2_base: ViewConfig, diffusion_kind: str = "ppr"):
    parts = label.split("&")
    if len(parts) != 2:
        raise UsageError(f"view pair label must be 'VIEW1 & VIEW2', got {label!r}")
    return (
        parse_view_label(parts[0], view1_base, diffusion_kind),
        parse_view_label(parts[1], view2_base, diffusion_kind),
    )


# ---------------------------------------------------------------------------
# dict <-> dataclass conversion


def node_to_dict(node: NodeAugmentation) -> dict:
    return {"kind": node.kind, "rate": node.rate}


def adjacency_to_dict(adj: AdjacencyAugmentation) -> dict:
    return {
        "kind": adj.kind,
        "alpha": adj.alpha,
        "t": adj.t,
        "order": adj.series_order,
        "solver": adj.solver,
        "epsilon": adj.sparsify_epsilon,
        "top_k": adj.sparsify_top_k,
    }


def view_to_dict(view: ViewConfig) -> dict:
    return {"node": node_to_dict(view.node), "adjacency": adjacency_to_dict(view.adjacency)}


def _node_from_dict(obj: dict, path: str) -> NodeAugmentation:
    obj = dict(obj)
    kind = obj.pop("kind", "identity")
    if not isinstance(kind, str) or kind.lower() not in _NODE_ALIASES:
        raise UsageError(f"{path}.kind: unknown node augmentation {kind!r}")
    rate = obj.pop("rate", 0.0)
    _reject_unknown(obj, path)
    return NodeAugmentation(kind=_NODE_ALIASES[kind.lower()], rate=float(rate))


def _adjacency_from_dict(obj: dict, path: str) -> AdjacencyAugmentation:
    obj = dict(obj)
    kind = obj.pop("kind", "normalized_adjacency")
    if not isinstance(kind, str) or kind.lower() not in _ADJ_ALIASES:
        raise UsageError(f"{path}.kind: unknown adjacency augmentation {kind!r}")
    defaults = AdjacencyAugmentation()
    top_k = obj.pop("top_k", defaults.sparsify_top_k)
    out = AdjacencyAugmentation(
        kind=_ADJ_ALIASES[kind.lower()],
        alpha=float(obj.pop("alpha", defaults.alpha)),
        t=float(obj.pop("t", defaults.t)),
        series_order=int(obj.pop("order", defaults.series_order)),
        solver=str(obj.pop("solver", defaults.solver)),
        sparsify_epsilon=float(obj.pop("epsilon", defaults.sparsify_epsilon)),
        sparsify_top_k=None if top_k is None else int(top_k),
    )
    _reject_unknown(obj, path)
    return out


def view_from_value(value, base: ViewConfig, path: str) -> ViewConfig:
    if isinstance(value, str):
        return parse_view_label(value, base)
    if not isinstance(value, dict):
        raise UsageError(f"{path}: expected a mapping or a view label string")
    value = dict(value)
    node = _node_from_dict(value.pop("node", {}), f"{path}.node")
    adjacency = _adjacency_from_dict(value.pop("adjacency", {}), f"{path}.adjacency")
    _reject_unknown(value, path)
    return ViewConfig(node=node, adjacency=adjacency)


def train_to_dict(cfg: TrainConfig) -> dict:
    return {
        "epochs": cfg.epochs,
        "lr": cfg.lr,
        "decay_p": cfg.decay_p,
        "embed_dim": cfg.embed_dim,
        "mlp_hidden": cfg.mlp_hidden,
        "activation": cfg.activation,
        "use_projector": cfg.use_projector,
        "view1": view_to_dict(cfg.view1),
        "view2": view_to_dict(cfg.view2),
        "seed": cfg.seed,
        "checkpoint_every": cfg.checkpoint_every,
        "early_stop": cfg.early_stop,
        "early_stop_patience": cfg.early_stop_patience,
        "early_stop_rel_improvement": cfg.early_stop_rel_improvement,
    }


def _train_from_dict(obj: dict, path: str = "train") -> TrainConfig:
    obj = dict(obj)
    defaults = TrainConfig()
    view1 = view_from_value(obj.pop("view1", view_to_dict(defaults.view1)), defaults.view1, f"{path}.view1")
    view2 = view_from_value(obj.pop("view2", view_to_dict(defaults.view2)), defaults.view2, f"{path}.view2")
    mlp_hidden = obj.pop("mlp_hidden", defaults.mlp_hidden)
    try:
        cfg = TrainConfig(
            epochs=int(obj.pop("epochs", defaults.epochs)),
            lr=float(obj.pop("lr", defaults.lr)),
            decay_p=float(obj.pop("decay_p", defaults.decay_p)),
            embed_dim=int(obj.pop("embed_dim", defaults.embed_dim)),
            mlp_hidden=None if mlp_hidden is None else int(mlp_hidden),
            activation=str(obj.pop("activation", defaults.activation)),
            use_projector=bool(obj.pop("use_projector", defaults.use_projector)),
            view1=view1,
            view2=view2,
            seed=int(obj.pop("seed", defaults.seed)),
            checkpoint_every=int(obj.pop("checkpoint_every", defaults.checkpoint_every)),
            early_stop=bool(obj.pop("early_stop", defaults.early_stop)),
            early_stop_patience=int(obj.pop("early_stop_patience", defaults.early_stop_patience)),
            early_stop_rel_improvement=float(
                obj.pop("early_stop_rel_improvement", defaults.early_stop_rel_improvement)
            ),
        )
    except ValueError as e:
        raise UsageError(f"{path}: {e}") from e
    _reject_unknown(obj, path)
    return cfg


def eval_to_dict(cfg: EvalConfig) -> dict:
    return {
        "runs": cfg.runs,
        "classifier_lr": cfg.classifier_lr,
        "classifier_epochs": cfg.classifier_epochs,
        "l2_penalty": cfg.l2_penalty,
        "seed": cfg.seed,
        "optimizer": cfg.optimizer,
        "init": cfg.init,
    }


def _eval_from_dict(obj: dict, path: str = "eval") -> EvalConfig:
    obj = dict(obj)
    defaults = EvalConfig()
    try:
        cfg = EvalConfig(
            runs=int(obj.pop("runs", defaults.runs)),
            classifier_lr=float(obj.pop("classifier_lr", defaults.classifier_lr)),
            classifier_epochs=int(obj.pop("classifier_epochs", defaults.classifier_epochs)),
            l2_penalty=float(obj.pop("l2_penalty", defaults.l2_penalty)),
            seed=int(obj.pop("seed", defaults.seed)),
            optimizer=str(obj.pop("optimizer", defaults.optimizer)),
            init=str(obj.pop("init", defaults.init)),
        )
    except ValueError as e:
        raise UsageError(f"{path}: {e}") from e
    _reject_unknown(obj, path)
    return cfg


def sweep_to_dict(cfg: SweepConfig) -> dict:
    return {
        "enabled": cfg.enabled,
        "rates": list(cfg.rates),
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "eval_runs": cfg.eval_runs,
    }


def ablate_to_dict(cfg: AblateConfig) -> dict:
    return {
        "pairs": list(cfg.pairs),
        "include_projection_ablation": cfg.include_projection_ablation,
        "decay_values": list(cfg.decay_values),
        "seeds": list(cfg.seeds),
        "epochs": cfg.epochs,
        "eval_runs": cfg.eval_runs,
        "diffusion": cfg.diffusion,
        "sweep": sweep_to_dict(cfg.sweep),
    }


def _ablate_from_dict(obj: dict, path: str = "ablate") -> AblateConfig:
    obj = dict(obj)
    defaults = AblateConfig()
    sweep_obj = dict(obj.pop("sweep", {}))
    sweep_defaults = SweepConfig()
    sweep_epochs = sweep_obj.pop("epochs", sweep_defaults.epochs)
    sweep = SweepConfig(
        enabled=bool(sweep_obj.pop("enabled", sweep_defaults.enabled)),
        rates=[float(r) for r in sweep_obj.pop("rates", sweep_defaults.rates)],
        epochs=None if sweep_epochs is None else int(sweep_epochs),
        seed=int(sweep_obj.pop("seed", sweep_defaults.seed)),
        eval_runs=int(sweep_obj.pop("eval_runs", sweep_defaults.eval_runs)),
    )
    _reject_unknown(sweep_obj, f"{path}.sweep")
    epochs = obj.pop("epochs", defaults.epochs)
    cfg = AblateConfig(
        pairs=[str(p) for p in obj.pop("pairs", defaults.pairs)],
        include_projection_ablation=bool(
            obj.pop("include_projection_ablation", defaults.include_projection_ablation)
        ),
        decay_values=[float(v) for v in obj.pop("decay_values", defaults.decay_values)],
        seeds=[int(s) for s in obj.pop("seeds", defaults.seeds)],
        epochs=None if epochs is None else int(epochs),
        eval_runs=int(obj.pop("eval_runs", defaults.eval_runs)),
        diffusion=str(obj.pop("diffusion", defaults.diffusion)),
        sweep=sweep,
    )
    _reject_unknown(obj, path)
    return cfg


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "dataset": cfg.dataset,
        "output_dir": cfg.output_dir,
        "train": train_to_dict(cfg.train),
        "eval": eval_to_dict(cfg.eval),
        "ablate": ablate_to_dict(cfg.ablate),
    }


def experiment_from_dict(obj: dict) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise UsageError("config file must contain a mapping at top level")
    obj = dict(obj)
    defaults = ExperimentConfig()
    cfg = ExperimentConfig(
        dataset=str(obj.pop("dataset", defaults.dataset)),
        output_dir=str(obj.pop("output_dir", defaults.output_dir)),
        train=_train_from_dict(dict(obj.pop("train", {}))),
        eval=_eval_from_dict(dict(obj.pop("eval", {}))),
        ablate=_ablate_from_dict(dict(obj.pop("ablate", {}))),
    )
    _reject_unknown(obj, "config")
    return cfg


def _reject_unknown(leftover: dict, path: str) -> None:
    if leftover:
        key = sorted(leftover)[0]
        raise UsageError(f"unknown config key {path}.{key}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            obj = yaml.safe_load(f)
    except OSError as e:
        raise UsageError(f"cannot read config {path!r}: {e}") from e
    except yaml.YAMLError as e:
        raise UsageError(f"invalid YAML in {path!r}: {e}") from e
    return experiment_from_dict(obj or {})


def render_defaults() -> str:
    return yaml.safe_dump(experiment_to_dict(ExperimentConfig()), sort_keys=True, default_flow_style=False)


def fingerprint(obj) -> str:
    """Stable 16-hex-digit digest of any JSON-encodable structure."""
    canon = json.dumps(_canonical(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float) and obj == int(obj) and abs(obj) < 2**53:
        return obj  # json renders 0.5 and 1.0 deterministically already
    return obj


def train_fingerprint(dataset: str, train: TrainConfig) -> str:
    return fingerprint({"dataset": dataset, "train": train_to_dict(train)})

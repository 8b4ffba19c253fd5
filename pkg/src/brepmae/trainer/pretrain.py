"""Masked-autoencoder pre-training loop."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..batch import collate
from ..errors import EmptyDataset
from ..mae import LossWeights, MAEConfig, PretrainModel, batch_mask
from ..nn import AdamW, LrSchedule, cosine_lr, init_parameters, no_grad
from ..rng import make_rng

COMPONENTS = ("feat", "geom", "attr", "aabb", "total")


@dataclass(frozen=True)
class PretrainConfig:
    lr: float = 1e-4
    min_lr: float = 0.0
    batch: int = 256
    epochs: int = 150
    mask_ratio: float = 0.8
    weights: LossWeights = field(default_factory=LossWeights)
    grid_size: int = 10
    edge_samples: int = 10
    n_enc: int = 3
    n_dec: int = 1
    seed: int = 0
    weight_decay: float = 0.01
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    edge_update: bool = True
    remask: bool = True
    decoder: str = "fold2"
    attr_norm: str = "layer"

    def mae_config(self):
        return MAEConfig(
            n_enc=self.n_enc,
            n_dec=self.n_dec,
            edge_update=self.edge_update,
            remask=self.remask,
            decoder=self.decoder,
            grid_size=self.grid_size,
        )

    def to_dict(self):
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d


def build_pretrain_model(cfg):
    model = PretrainModel(cfg.mae_config(), cfg.attr_norm)
    init_parameters(model, cfg.seed)
    return model


def batches(n, size, rng=None):
    order = np.arange(n) if rng is None else rng.permutation(n)
    return [order[i : i + size] for i in range(0, n, size)]


def _mean_components(rows):
    return {k: float(np.mean([r[k] for r in rows])) for k in COMPONENTS}


def evaluate_reconstruction(model, graphs, cfg, epoch=0):
    """Mean component losses in eval mode with a fixed mask stream."""
    model.eval()
    rng = make_rng(cfg.seed, "val-mask")
    rows = []
    with no_grad():
        for idx in batches(len(graphs), cfg.batch):
            b = collate([graphs[i] for i in idx])
            comps = model(b, batch_mask(b, cfg.mask_ratio, rng), cfg.weights)
            rows.append({k: float(v.data) for k, v in comps.items()})
    model.train()
    return _mean_components(rows)


def pretrain(train_graphs, cfg, val_graphs=None, model=None, on_epoch=None):
    """Train the autoencoder; returns ``(model, history)``.

    Each epoch shuffles the graphs with its own seeded stream and draws a
    fresh mask set per graph. The learning rate follows a per-step cosine
    schedule over ``epochs * steps_per_epoch`` steps.
    """
    train_graphs = list(train_graphs)
    if not train_graphs:
        raise EmptyDataset("pre-training needs at least one training graph")
    model = model or build_pretrain_model(cfg)
    model.train()
    opt = AdamW(model.parameters(), cfg.lr, cfg.betas, cfg.eps, cfg.weight_decay)
    steps_per_epoch = -(-len(train_graphs) // cfg.batch)
    sched = LrSchedule(cfg.lr, cfg.min_lr, cfg.epochs * steps_per_epoch)
    history = []
    step = 0
    for epoch in range(cfg.epochs):
        mask_rng = make_rng(cfg.seed, "mask", epoch)
        model.set_dropout_rng(cfg.seed, epoch)
        rows = []
        lr0 = cosine_lr(sched, step)
        for idx in batches(len(train_graphs), cfg.batch, make_rng(cfg.seed, "shuffle", epoch)):
            b = collate([train_graphs[i] for i in idx])
            comps = model(b, batch_mask(b, cfg.mask_ratio, mask_rng), cfg.weights)
            opt.zero_grad()
            comps["total"].backward()
            opt.step(cosine_lr(sched, step))
            step += 1
            rows.append({k: float(v.data) for k, v in comps.items()})
        record = {"epoch": epoch + 1, "lr": lr0, "train": _mean_components(rows)}
        if val_graphs:
            record["val"] = evaluate_reconstruction(model, val_graphs, cfg, epoch)
        history.append(record)
        if on_epoch is not None:
            on_epoch(record)
    return model, history

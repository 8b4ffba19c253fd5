"""Per-face classification: head, loss, fine-tuning with early stopping."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..batch import collate
from ..embedder import Embedder
from ..errors import EmptyDataset, LabelOutOfRange, MissingNamespace, ShapeError
from ..gaag.graph import NO_LABEL
from ..mae import MPNNLayer, run_mpnn
from ..nn import AdamW, Dropout, Linear, Module, init_parameters, no_grad
from ..nn.tensor import Tensor, gather_rows, log_softmax, pick, relu, softmax
from ..rng import make_rng
from .metrics import accuracy, mean_iou
from .pretrain import batches

ENCODER_NAMESPACES = ("embedder", "mae.mpnn_enc")


@dataclass(frozen=True)
class FinetuneConfig:
    lr: float = 5e-4
    weight_decay: float = 1e-4
    max_epochs: int = 50
    patience: int = 5
    label_ratio: float = 1.0
    freeze_encoder: bool = False
    head: str = "mlp3"
    n_classes: int = 25
    seed: int = 0
    batch: int = 32
    n_enc: int = 3
    edge_update: bool = True
    attr_norm: str = "layer"
    track_train_acc: bool = False

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not 0.0 < self.label_ratio <= 1.0:
            raise ValueError("label_ratio must lie in (0, 1]")
        if self.head not in ("mlp3", "mlp2", "linear"):
            raise ValueError(f"unknown head {self.head!r}")

    def to_dict(self):
        return asdict(self)


class Head(Module):
    """mlp3: 256-1024-256-n_c with dropout 0.5; mlp2: 256-256-n_c; linear: 256-n_c."""

    def __init__(self, kind, n_classes):
        super().__init__()
        self.kind = kind
        if kind == "mlp3":
            self.fc1, self.drop1 = Linear(256, 1024), Dropout(0.5)
            self.fc2, self.drop2 = Linear(1024, 256), Dropout(0.5)
            self.fc3 = Linear(256, n_classes)
        elif kind == "mlp2":
            self.fc1 = Linear(256, 256)
            self.fc2 = Linear(256, n_classes)
        else:
            self.fc1 = Linear(256, n_classes)

    def forward(self, x):
        if self.kind == "mlp3":
            x = self.drop1(relu(self.fc1(x)))
            x = self.drop2(relu(self.fc2(x)))
            return self.fc3(x)
        if self.kind == "mlp2":
            return self.fc2(relu(self.fc1(x)))
        return self.fc1(x)


class EncoderStack(Module):
    def __init__(self, n_enc, edge_update=True):
        super().__init__()
        self.mpnn_enc = [MPNNLayer(edge_update) for _ in range(n_enc)]


class Classifier(Module):
    """Embedder and MPNN encoder followed by a per-face head."""

    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        self.embedder = Embedder(cfg.attr_norm)
        self.mae = EncoderStack(cfg.n_enc, cfg.edge_update)
        self.head = Head(cfg.head, cfg.n_classes)

    def features(self, batch):
        x, e = self.embedder(batch)
        h, _ = run_mpnn(self.mae.mpnn_enc, x, e, batch)
        return gather_rows(h, np.arange(batch.n_real))

    def forward(self, batch):
        """Logits for every real face of the batch (virtual nodes excluded)."""
        if self.cfg.freeze_encoder:
            was_training = self.training
            self.embedder.eval()
            self.mae.eval()
            with no_grad():
                feats = Tensor(self.features(batch).data)
            self.embedder.train(was_training)
            self.mae.train(was_training)
        else:
            feats = self.features(batch)
        return self.head(feats)

    def trainable_parameters(self):
        prefix = ("head",) if self.cfg.freeze_encoder else ()
        return [p for n, p in self.named_parameters() if not prefix or n.startswith("head.")]


def build_classifier(cfg, pretrained_state=None):
    model = Classifier(cfg)
    init_parameters(model, cfg.seed)
    if pretrained_state is not None:
        load_encoder(model, pretrained_state)
    return model


def load_encoder(model, state):
    """Copy every ``embedder.*`` and ``mae.mpnn_enc.*`` entry from a checkpoint."""
    for ns in ENCODER_NAMESPACES:
        if not any(k.startswith(ns + ".") for k in state):
            raise MissingNamespace(f"checkpoint has no {ns!r} entries")
    wanted = {k: v for k, v in state.items() if k.startswith(ENCODER_NAMESPACES)}
    own = model.state_dict()
    missing = [k for k in own if k.startswith(ENCODER_NAMESPACES) and k not in wanted]
    if missing:
        raise MissingNamespace(f"checkpoint lacks {missing[0]!r}")
    model.load_state_dict(wanted, strict=False)


# --------------------------------------------------------------------------
# loss and prediction
# --------------------------------------------------------------------------


def _check_labels(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    bad = (labels != NO_LABEL) & ((labels < 0) | (labels >= n_classes))
    if bad.any():
        raise LabelOutOfRange(f"label {int(labels[bad][0])} outside [0, {n_classes})")
    return labels


def finetune_loss(logits, labels):
    """Summed cross-entropy over labeled faces; unlabeled faces are ignored."""
    labels = _check_labels(labels, logits.shape[-1])
    keep = np.flatnonzero(labels != NO_LABEL)
    if len(keep) == 0:
        return Tensor(0.0)
    lp = log_softmax(gather_rows(logits, keep))
    return -pick(lp, labels[keep]).sum()


def batch_loss(logits, batch):
    """Mean over the batch's models of each model's summed cross-entropy."""
    return finetune_loss(logits, batch.labels) * (1.0 / batch.n_graphs)


def classify_faces(model, graph_or_batch):
    """Softmax probability rows for every real face (eval mode)."""
    from ..gaag.graph import GAAG

    b = collate([graph_or_batch]) if isinstance(graph_or_batch, GAAG) else graph_or_batch
    was = model.training
    model.eval()
    with no_grad():
        probs = softmax(model(b)).data
    model.train(was)
    if probs.shape[0] != b.n_real:
        raise ShapeError("classifier returned a row count different from the face count")
    return probs


def predict(model, graphs, batch_size=32):
    """Concatenated (predictions, labels) over every face of ``graphs``."""
    preds, labels = [], []
    was = model.training
    model.eval()
    with no_grad():
        for idx in batches(len(graphs), batch_size):
            b = collate([graphs[i] for i in idx])
            preds.append(np.argmax(model(b).data, axis=1))
            labels.append(b.labels)
    model.train(was)
    return np.concatenate(preds), np.concatenate(labels)


def evaluate(model, graphs, n_classes, strict=False, batch_size=32):
    """Accuracy and mIoU over labeled faces."""
    preds, labels = predict(model, graphs, batch_size)
    keep = labels != NO_LABEL
    return {
        "acc": accuracy(preds[keep], labels[keep]),
        "miou": mean_iou(preds[keep], labels[keep], n_classes, strict),
    }


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


def subsample_models(n, ratio, seed):
    """Sorted indices of round(ratio * n) models (at least one)."""
    k = min(n, max(1, int(math.floor(ratio * n + 0.5))))
    return np.sort(make_rng(seed, "label-subsample").permutation(n)[:k])


def finetune(train_graphs, cfg, val_graphs=None, pretrained_state=None, model=None, epochs=None):
    """Train the classifier; returns ``(model, history, best)``.

    With validation graphs, training stops once ``patience`` epochs pass
    without a strictly better validation accuracy and the best weights are
    restored. Without them, training runs for the full epoch budget.
    """
    train_graphs = list(train_graphs)
    if not train_graphs:
        raise EmptyDataset("fine-tuning needs at least one labeled model")
    for g in train_graphs:
        _check_labels(g.labels, cfg.n_classes)
    chosen = subsample_models(len(train_graphs), cfg.label_ratio, cfg.seed)
    train = [train_graphs[i] for i in chosen]
    model = model or build_classifier(cfg, pretrained_state)
    model.train()
    opt = AdamW(model.trainable_parameters(), cfg.lr, weight_decay=cfg.weight_decay)
    n_epochs = cfg.max_epochs if epochs is None else epochs
    history = []
    best = {"epoch": 0, "val_acc": -1.0, "state": None}
    for epoch in range(n_epochs):
        model.set_dropout_rng(cfg.seed, epoch)
        losses = []
        for idx in batches(len(train), cfg.batch, make_rng(cfg.seed, "ft-shuffle", epoch)):
            b = collate([train[i] for i in idx])
            loss = batch_loss(model(b), b)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
        record = {"epoch": epoch + 1, "loss": float(np.mean(losses)), "n_models": len(train)}
        if cfg.track_train_acc:
            record["train_acc"] = evaluate(model, train, cfg.n_classes)["acc"]
        if val_graphs:
            val_acc = evaluate(model, val_graphs, cfg.n_classes)["acc"]
            record["val_acc"] = val_acc
            if val_acc > best["val_acc"]:
                best = {"epoch": epoch + 1, "val_acc": val_acc, "state": model.state_dict()}
        history.append(record)
        if val_graphs and epoch + 1 - best["epoch"] >= cfg.patience:
            break
    if best["state"] is not None:
        model.load_state_dict(best["state"])
    return model, history, {"epoch": best["epoch"], "val_acc": best["val_acc"]}

"""N-way K-shot episodes over whole models."""

from dataclasses import dataclass, replace

import numpy as np

from ..errors import InsufficientModels
from ..gaag.graph import NO_LABEL
from ..rng import make_rng
from .finetune import evaluate, finetune


@dataclass(frozen=True)
class Episode:
    classes: tuple
    support: tuple  # model indices, ``shot`` per class in class order
    query: tuple

    @property
    def way(self):
        return len(self.classes)


def label_sets(graphs):
    return [frozenset(int(c) for c in np.unique(g.labels) if c != NO_LABEL) for g in graphs]


def sample_episode(sets, way, shot, query_size, seed, index=0):
    """Draw one episode from per-model class sets.

    A model counts for class ``c`` when it has at least one face labeled ``c``.
    Classes are drawn without replacement among those with at least ``shot``
    models; each model is used for at most one class, and query models are
    drawn from the remaining models that contain any episode class.
    """
    rng = make_rng(seed, "episode", index)
    counts = {}
    for s in sets:
        for c in s:
            counts[c] = counts.get(c, 0) + 1
    eligible = sorted(c for c, n in counts.items() if n >= shot)
    if len(eligible) < way:
        raise InsufficientModels(f"only {len(eligible)} classes have {shot} models, need {way}")
    classes = tuple(sorted(int(c) for c in rng.choice(eligible, size=way, replace=False)))
    used, support = set(), []
    for c in classes:
        pool = [i for i, s in enumerate(sets) if c in s and i not in used]
        if len(pool) < shot:
            raise InsufficientModels(f"class {c} has {len(pool)} unused models, need {shot}")
        pick = sorted(int(i) for i in rng.choice(pool, size=shot, replace=False))
        used.update(pick)
        support.extend(pick)
    rest = [i for i, s in enumerate(sets) if i not in used and s & set(classes)]
    if not rest:
        raise InsufficientModels("no models left for the query set")
    n_query = min(query_size, len(rest))
    query = sorted(int(i) for i in rng.choice(rest, size=n_query, replace=False))
    return Episode(classes, tuple(support), tuple(query))


def relabel(graph, classes):
    """Map episode classes to 0..way-1; every other face becomes unlabeled."""
    lut = {c: i for i, c in enumerate(classes)}
    labels = np.array([lut.get(int(c), NO_LABEL) for c in graph.labels], dtype=np.int64)
    return graph.with_(labels=labels)


def fewshot_eval(graphs, cfg, way, shot, query_size, n_episodes, pretrained_state=None, epochs=None):
    """Fine-tune an episode-local model per episode and score its query set.

    Returns per-episode rows and mean/std of accuracy and mIoU. Faces whose
    class lies outside the episode are excluded from training and metrics.
    """
    sets = label_sets(graphs)
    rows = []
    for i in range(n_episodes):
        ep = sample_episode(sets, way, shot, query_size, cfg.seed, i)
        support = [relabel(graphs[j], ep.classes) for j in ep.support]
        query = [relabel(graphs[j], ep.classes) for j in ep.query]
        ecfg = replace(cfg, n_classes=way, label_ratio=1.0, seed=cfg.seed + i)
        model, history, _ = finetune(support, ecfg, None, pretrained_state, epochs=epochs)
        scores = evaluate(model, query, way)
        rows.append({"episode": i, "classes": list(ep.classes), "epochs": len(history), **scores})
    acc = np.array([r["acc"] for r in rows])
    miou = np.array([r["miou"] for r in rows])
    return {
        "episodes": rows,
        "acc_mean": float(acc.mean()),
        "acc_std": float(acc.std()),
        "miou_mean": float(miou.mean()),
        "miou_std": float(miou.std()),
    }

"""Strict JSON run configuration.

A config document has up to five sections (``data``, ``pretrain``,
``finetune``, ``fewshot``, ``ablation``). Missing keys take their defaults;
unknown sections or keys raise :class:`ConfigError`.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigError
from .mae import LossWeights
from .synthgen import FEATURE_KINDS
from .trainer.finetune import FinetuneConfig
from .trainer.pretrain import PretrainConfig

LABEL_RATIOS = (0.001, 0.005, 0.01, 0.03, 0.08, 0.125, 1.0)
MASK_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
LOSS_WEIGHT_ROWS = (
    (0.4, 0.36, 0.12, 0.12),
    (0.25, 0.25, 0.25, 0.25),
    (0.7, 0.1, 0.1, 0.1),
    (0.1, 0.7, 0.1, 0.1),
)
UV_RESOLUTIONS = (5, 10, 15, 30)
PROBING_MODES = (("linear", True), ("linear", False), ("mlp2", True), ("mlp2", False))


@dataclass(frozen=True)
class DataConfig:
    n_parts: int = 100
    kinds: tuple = FEATURE_KINDS
    max_features: int = 3
    grid_size: int = 10
    edge_samples: int = 10
    seed: int = 0


@dataclass(frozen=True)
class FewshotConfig:
    way: int = 5
    shot: int = 5
    query_size: int = 20
    episodes: int = 5
    epochs: int = 20
    freeze_encoder: bool = False


@dataclass(frozen=True)
class AblationConfig:
    mask_ratios: tuple = MASK_RATIOS
    loss_weights: tuple = LOSS_WEIGHT_ROWS
    uv_resolutions: tuple = UV_RESOLUTIONS
    probing: tuple = PROBING_MODES
    label_ratios: tuple = LABEL_RATIOS
    seeds: tuple = (0,)
    pretrain_epochs: int = 2
    finetune_epochs: int = 5


@dataclass(frozen=True)
class Config:
    data: DataConfig = field(default_factory=DataConfig)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    fewshot: FewshotConfig = field(default_factory=FewshotConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    def with_seed(self, seed):
        return replace(
            self,
            data=replace(self.data, seed=seed),
            pretrain=replace(self.pretrain, seed=seed),
            finetune=replace(self.finetune, seed=seed),
            ablation=replace(self.ablation, seeds=(seed,)),
        )

    def to_dict(self):
        return _plain(asdict(self))

    def sha256(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


SECTIONS = {
    "data": DataConfig,
    "pretrain": PretrainConfig,
    "finetune": FinetuneConfig,
    "fewshot": FewshotConfig,
    "ablation": AblationConfig,
}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _tuple(v):
    return tuple(_tuple(x) for x in v) if isinstance(v, list) else v


def _section(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise ConfigError(f"unknown key {where}.{unknown[0]}")
    kwargs = {}
    for key, value in doc.items():
        if cls is PretrainConfig and key == "weights":
            value = _weights(value, f"{where}.weights")
        else:
            value = _tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _weights(doc, where):
    if isinstance(doc, list):
        names = [f.name for f in fields(LossWeights)]
        if len(doc) > len(names):
            raise ConfigError(f"{where} has more than {len(names)} entries")
        doc = dict(zip(names, doc))
    return _section(LossWeights, doc, where)


def parse_config(doc):
    """Build a :class:`Config` from a decoded JSON object."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section {unknown[0]!r}")
    sections = {name: _section(cls, doc[name], name) for name, cls in SECTIONS.items() if name in doc}
    cfg = Config(**sections)
    # the gAAG resolution is a data property; the pre-training model follows it
    pre = replace(cfg.pretrain, grid_size=cfg.data.grid_size, edge_samples=cfg.data.edge_samples)
    return replace(cfg, pretrain=pre)


def load_config(path=None):
    if path is None:
        return parse_config({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_config(doc)

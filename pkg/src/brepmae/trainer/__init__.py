"""Training loops, metrics, few-shot episodes and run bookkeeping."""

from .data import GraphDataset, build_dataset, load_cache, load_dataset, preprocess
from .fewshot import Episode, fewshot_eval, sample_episode
from .finetune import (
    Classifier,
    FinetuneConfig,
    build_classifier,
    classify_faces,
    evaluate,
    finetune,
    finetune_loss,
    load_encoder,
    subsample_models,
)
from .manifest import CSV_HEADER, RunManifest, format_csv, result_row, write_csv
from .metrics import accuracy, confusion_matrix, mean_iou
from .pretrain import PretrainConfig, build_pretrain_model, evaluate_reconstruction, pretrain

__all__ = [
    "CSV_HEADER",
    "Classifier",
    "Episode",
    "FinetuneConfig",
    "GraphDataset",
    "PretrainConfig",
    "RunManifest",
    "accuracy",
    "build_classifier",
    "build_dataset",
    "build_pretrain_model",
    "classify_faces",
    "confusion_matrix",
    "evaluate",
    "evaluate_reconstruction",
    "fewshot_eval",
    "finetune",
    "finetune_loss",
    "format_csv",
    "load_cache",
    "load_dataset",
    "load_encoder",
    "mean_iou",
    "preprocess",
    "pretrain",
    "result_row",
    "sample_episode",
    "subsample_models",
    "write_csv",
]

"""Command-line entry point: ``brepmae <command> [options]``.

Every command accepts ``--config`` (strict JSON), ``--seed`` and ``--out``.
Failures print one JSON object on stderr and exit with status 2.
"""

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace

from . import __version__
from .brep.io import load_solid
from .brep.normalize import normalize_solid
from .brep.validate import validate_solid
from .config import LABEL_RATIOS, load_config
from .errors import BRepMAEError, CheckpointError, ConfigError
from .gaag import build_gaag, load_gaag
from .mae import LossWeights
from .nn import count_params, load_checkpoint, save_checkpoint
from .synthgen import gen_dataset
from .trainer import (
    RunManifest,
    build_classifier,
    evaluate,
    fewshot_eval,
    finetune,
    load_dataset,
    preprocess,
    pretrain,
    result_row,
    write_csv,
)
from .trainer.data import CACHE_ENV, write_json
from .trainer.finetune import FinetuneConfig
from .trainer.manifest import CSV_HEADER, Stopwatch

PRESETS = ("mask-ratio", "loss-weights", "uv-res", "probing", "label-ratio")
SWEEP_HEADER = ("setting",) + CSV_HEADER


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _resolve(args):
    cfg = load_config(args.config)
    return cfg.with_seed(args.seed) if args.seed is not None else cfg


def _out_dir(args, default="out"):
    path = args.out or default
    os.makedirs(path, exist_ok=True)
    return path


def _save_model(path, model, kind, cfg, trainable_names, extra=None):
    meta = {"kind": kind, "config": cfg.to_dict(), **(extra or {})}
    data = save_checkpoint(path, model.state_dict(), trainable_names, cfg.sha256(), meta)
    return hashlib.sha256(data).hexdigest()


def _load_state(path, expect=None):
    header, state = load_checkpoint(path)
    kind = header.get("meta", {}).get("kind")
    if expect is not None and kind != expect:
        raise CheckpointError(f"{path} holds a {kind!r} checkpoint, expected {expect!r}")
    return header, state


def _dataset(args, cfg, k=None):
    """Load graphs; an explicit ``k`` sets both the face grid and the edge sample count."""
    s = k or cfg.data.edge_samples
    k = k or cfg.data.grid_size
    ds = load_dataset(args.data, k, s)
    if ds.graphs and (ds.graphs[0].grid_size, ds.graphs[0].edge_samples) != (k, s):
        raise ConfigError(f"{args.data} was cached at a different UV resolution than {k}")
    return ds


def _emit(obj):
    print(json.dumps(obj, indent=1, sort_keys=True))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_gen_synth(args):
    cfg = _resolve(args)
    n = args.n if args.n is not None else cfg.data.n_parts
    out = _out_dir(args, "synth")
    manifest = gen_dataset(n, out, cfg.data.kinds, cfg.data.seed, cfg.data.max_features)
    _emit({"out": out, "n_parts": manifest["n_parts"]})


def cmd_preprocess(args):
    cfg = _resolve(args)
    out = args.out or os.environ.get(CACHE_ENV) or "cache"
    manifest = args.manifest
    if os.path.isdir(manifest):
        manifest = os.path.join(manifest, "manifest.json")
    cache = preprocess(manifest, out, cfg.data.grid_size, cfg.data.edge_samples)
    _emit({"out": out, "parts": len(cache["parts"]), "skipped": len(cache["skipped"])})


def _run_pretrain(ds, cfg, pcfg, out, command="pretrain"):
    run = RunManifest(command, pcfg.seed, cfg.to_dict(), ds.dataset_hash, ds.standardizer.sha256())
    model, _ = pretrain(ds.split("train"), pcfg, ds.split("val"), on_epoch=run.log_epoch)
    sha = None
    if out is not None:
        names = [n for n, _ in model.named_parameters()]
        sha = _save_model(os.path.join(out, "pretrain.ckpt"), model, "pretrain", cfg, names)
        run.finish(sha).save(os.path.join(out, "pretrain_run.json"))
    return model, run


def cmd_pretrain(args):
    cfg = _resolve(args)
    out = _out_dir(args)
    ds = _dataset(args, cfg)
    model, run = _run_pretrain(ds, cfg, cfg.pretrain, out)
    last = run.to_dict()["history"][-1]
    _emit({"checkpoint": os.path.join(out, "pretrain.ckpt"), "final": last["train"]})


def _train_classifier(ds, fcfg, state, epochs=None):
    model, history, best = finetune(ds.split("train"), fcfg, ds.split("val"), state, epochs=epochs)
    return model, history, best


def _score_rows(model, ds, fcfg, ratio, epochs, clock, strict=False, splits=("val", "test")):
    rows = []
    for split in splits:
        graphs = ds.split(split)
        if not graphs:
            continue
        m = evaluate(model, graphs, fcfg.n_classes, strict)
        rows.append(result_row(ratio, fcfg.seed, split, m["acc"], m["miou"], epochs, clock.seconds()))
    return rows


def cmd_finetune(args):
    cfg = _resolve(args)
    out = _out_dir(args)
    fcfg = cfg.finetune
    if args.freeze:
        fcfg = replace(fcfg, freeze_encoder=True)
    if args.head:
        fcfg = replace(fcfg, head=args.head)
    if args.label_ratio is not None:
        fcfg = replace(fcfg, label_ratio=args.label_ratio)
    ds = _dataset(args, cfg)
    state = _load_state(args.checkpoint, "pretrain")[1] if args.checkpoint else None
    clock = Stopwatch()
    run = RunManifest("finetune", fcfg.seed, cfg.to_dict(), ds.dataset_hash, ds.standardizer.sha256())
    model, history, best = _train_classifier(ds, fcfg, state)
    for rec in history:
        run.log_epoch(rec)
    rows = _score_rows(model, ds, fcfg, fcfg.label_ratio, len(history), clock, args.miou_strict)
    for r in rows:
        run.log_result(r)
    names = [n for n, _ in model.named_parameters()]
    if fcfg.freeze_encoder:
        names = [n for n in names if n.startswith("head.")]
    extra = {"finetune": fcfg.to_dict(), "best_epoch": best["epoch"], "pretrained": bool(state)}
    sha = _save_model(os.path.join(out, "classifier.ckpt"), model, "classifier", cfg, names, extra)
    run.finish(sha, best_epoch=best["epoch"], loss="per-model summed cross-entropy, mean over models in a batch")
    run.save(os.path.join(out, "finetune_run.json"))
    write_csv(os.path.join(out, "results.csv"), rows)
    _emit({"checkpoint": os.path.join(out, "classifier.ckpt"), "results": rows})


def _classifier_from_checkpoint(path):
    header, state = _load_state(path, "classifier")
    fcfg = FinetuneConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in header["meta"]["finetune"].items()})
    model = build_classifier(fcfg)
    model.load_state_dict(state)
    return model, fcfg


def _parse_ratios(text):
    if text == "default":
        return LABEL_RATIOS
    return tuple(float(x) for x in text.split(","))


def _parse_seeds(text, fallback):
    return tuple(int(x) for x in text.split(",")) if text else fallback


def cmd_eval(args):
    cfg = _resolve(args)
    out = _out_dir(args)
    ds = _dataset(args, cfg)
    clock = Stopwatch()
    rows = []
    if args.ratios:
        # label-efficiency harness: fine-tune per (ratio, seed) and score the test split
        state = _load_state(args.checkpoint, "pretrain")[1] if args.checkpoint else None
        seeds = _parse_seeds(args.seeds, (cfg.finetune.seed,))
        for ratio in _parse_ratios(args.ratios):
            for seed in seeds:
                fcfg = replace(cfg.finetune, label_ratio=ratio, seed=seed)
                model, history, _ = _train_classifier(ds, fcfg, state)
                rows += _score_rows(model, ds, fcfg, ratio, len(history), clock, args.miou_strict, (args.split,))
    else:
        if not args.checkpoint:
            raise ConfigError("eval needs --checkpoint (a classifier) or --ratios")
        model, fcfg = _classifier_from_checkpoint(args.checkpoint)
        m = evaluate(model, ds.split(args.split), fcfg.n_classes, args.miou_strict)
        rows.append(result_row(fcfg.label_ratio, fcfg.seed, args.split, m["acc"], m["miou"], 0, clock.seconds()))
    write_csv(os.path.join(out, "eval.csv"), rows)
    _emit({"csv": os.path.join(out, "eval.csv"), "rows": rows})


def cmd_fewshot(args):
    cfg = _resolve(args)
    out = _out_dir(args)
    fs = cfg.fewshot
    ds = _dataset(args, cfg)
    state = _load_state(args.checkpoint, "pretrain")[1] if args.checkpoint else None
    fcfg = replace(cfg.finetune, freeze_encoder=fs.freeze_encoder)
    clock = Stopwatch()
    report = fewshot_eval(ds.split(args.split), fcfg, fs.way, fs.shot, fs.query_size, fs.episodes, state, fs.epochs)
    rows = [
        result_row(1.0, fcfg.seed + r["episode"], "query", r["acc"], r["miou"], r["epochs"], clock.seconds())
        for r in report["episodes"]
    ]
    write_csv(os.path.join(out, "fewshot.csv"), rows)
    write_json({"config": cfg.to_dict(), **report}, os.path.join(out, "fewshot.json"))
    _emit({k: report[k] for k in ("acc_mean", "acc_std", "miou_mean", "miou_std")})


def _sweep_settings(preset, ab, pcfg):
    """Yield (label, pretrain config, finetune overrides, grid size or None)."""
    if preset == "mask-ratio":
        for r in ab.mask_ratios:
            yield f"mask_ratio={r:g}", replace(pcfg, mask_ratio=r), {}, None
    elif preset == "loss-weights":
        for row in ab.loss_weights:
            w = LossWeights(*row)
            label = "weights=" + "/".join(f"{x:g}" for x in row)
            yield label, replace(pcfg, weights=w), {}, None
    elif preset == "uv-res":
        for k in ab.uv_resolutions:
            yield f"uv={k}", replace(pcfg, grid_size=k, edge_samples=k), {}, k
    elif preset == "probing":
        for head, frozen in ab.probing:
            mode = "frozen" if frozen else "e2e"
            yield f"{head}/{mode}", pcfg, {"head": head, "freeze_encoder": bool(frozen)}, None
    else:
        for r in ab.label_ratios:
            yield f"label_ratio={r:g}", pcfg, {"label_ratio": r}, None


def cmd_sweep(args):
    cfg = _resolve(args)
    out = _out_dir(args)
    ab = cfg.ablation
    pcfg = replace(cfg.pretrain, epochs=ab.pretrain_epochs)
    clock = Stopwatch()
    rows, cache, shared = [], {}, {}
    for label, p, ft, k in _sweep_settings(args.preset, ab, pcfg):
        grid = k or cfg.data.grid_size
        if grid not in cache:
            cache[grid] = _dataset(args, cfg, grid)
        ds = cache[grid]
        for seed in ab.seeds:
            ps = replace(p, seed=seed)
            key = repr(ps)
            if key not in shared:
                shared = {key: _run_pretrain(ds, cfg, ps, None, "sweep")[0].state_dict()}
            fcfg = replace(cfg.finetune, seed=seed, **ft)
            model, history, _ = _train_classifier(ds, fcfg, shared[key], ab.finetune_epochs)
            m = evaluate(model, ds.split("test"), fcfg.n_classes, args.miou_strict)
            row = result_row(fcfg.label_ratio, seed, "test", m["acc"], m["miou"], len(history), clock.seconds())
            rows.append({"setting": label, **row})
    path = os.path.join(out, f"sweep_{args.preset}.csv")
    write_csv(path, rows, SWEEP_HEADER)
    write_json({"preset": args.preset, "config": cfg.to_dict(), "rows": rows}, os.path.join(out, f"sweep_{args.preset}.json"))
    _emit({"csv": path, "rows": len(rows)})


def _inspect_graph(g):
    return {
        "kind": "gaag",
        "name": g.name,
        "n_faces": g.n_real,
        "n_directed_edges": g.n_real_edges,
        "n_virtual_edges": g.n_edges - g.n_real_edges,
        "face_grid": list(g.face_grid.shape),
        "edge_grid": list(g.edge_grid.shape),
        "face_attr": list(g.face_attr.shape),
        "edge_attr": list(g.edge_attr.shape),
        "labels": sorted({int(x) for x in g.labels}),
    }


def cmd_inspect(args):
    with open(args.path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and str(doc.get("version", "")).startswith("gaag"):
        _emit(_inspect_graph(load_gaag(args.path)))
        return
    solid = load_solid(args.path)
    report = validate_solid(solid)
    info = {
        "kind": "solid",
        "name": solid.name,
        "n_faces": len(solid.faces),
        "n_edges": len(solid.edges),
        "surfaces": sorted({f.surface.kind for f in solid.faces}),
        "defects": [str(d) for d in report.defects],
    }
    if report.ok:
        g = build_gaag(normalize_solid(solid), validate=False)
        info["gaag"] = _inspect_graph(g)
    _emit(info)


def cmd_params(args):
    header, _ = load_checkpoint(args.checkpoint)
    _emit({"params": count_params(header, tuple(args.namespace))})


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="brepmae", description="Masked graph autoencoder for B-Rep solids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="strict JSON config file")
        p.add_argument("--seed", type=int, help="override every seed in the config")
        p.add_argument("--out", help="output directory")
        p.set_defaults(func=func)
        return p

    p = command("gen-synth", cmd_gen_synth, "generate a synthetic labeled dataset")
    p.add_argument("--n", type=int, help="number of parts (default from config)")

    p = command("preprocess", cmd_preprocess, "convert a dataset manifest into a gAAG cache")
    p.add_argument("manifest", help="dataset manifest.json or its directory")

    p = command("pretrain", cmd_pretrain, "masked-autoencoder pre-training")
    p.add_argument("--data", required=True, help="gAAG cache directory or raw dataset")

    p = command("finetune", cmd_finetune, "train the per-face classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", help="pre-trained checkpoint (omit to train from scratch)")
    p.add_argument("--head", choices=("mlp3", "mlp2", "linear"))
    p.add_argument("--freeze", action="store_true", help="train the head only")
    p.add_argument("--label-ratio", type=float)
    p.add_argument("--miou-strict", action="store_true")

    p = command("eval", cmd_eval, "score a classifier or run the label-ratio harness")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--ratios", help="comma-separated label ratios, or 'default'")
    p.add_argument("--seeds", help="comma-separated seeds for --ratios")
    p.add_argument("--miou-strict", action="store_true")

    p = command("fewshot", cmd_fewshot, "N-way K-shot episodes")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))

    p = command("sweep", cmd_sweep, "run an ablation preset")
    p.add_argument("--data", required=True, help="raw dataset (needed to rebuild graphs per UV resolution)")
    p.add_argument("--preset", required=True, choices=PRESETS)
    p.add_argument("--miou-strict", action="store_true")

    p = command("inspect", cmd_inspect, "print shapes, attributes and defects of a solid or gAAG file")
    p.add_argument("path")

    p = command("params", cmd_params, "count trainable parameters in a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--namespace", action="append", default=[], help="name prefix filter (repeatable)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except BRepMAEError as exc:
        print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "io", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

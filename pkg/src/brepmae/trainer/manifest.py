"""Run manifests and result CSVs."""

import csv
import io
import os
import time

from .data import write_json

CSV_HEADER = ("ratio", "seed", "split", "acc", "miou", "epochs", "wall_s")
WALLCLOCK_ENV = "BREPMAE_WALLCLOCK"


def wallclock_enabled():
    """Timing is opt-in so that result files stay byte-identical across runs."""
    return os.environ.get(WALLCLOCK_ENV, "0") not in ("", "0")


class Stopwatch:
    def __init__(self):
        self.start = time.perf_counter()

    def seconds(self):
        return time.perf_counter() - self.start if wallclock_enabled() else 0.0


class RunManifest:
    """Append-only record of one training run."""

    def __init__(self, command, seed, config, dataset_hash=None, standardizer_hash=None):
        self._doc = {
            "version": "run-v1",
            "command": command,
            "seed": seed,
            "config": config,
            "dataset_sha256": dataset_hash,
            "standardizer_sha256": standardizer_hash,
            "history": [],
            "results": [],
            "checkpoint_sha256": None,
        }
        self._clock = Stopwatch()

    def log_epoch(self, record):
        self._doc["history"].append(record)

    def log_result(self, row):
        self._doc["results"].append(row)

    def finish(self, checkpoint_sha=None, **extra):
        self._doc["checkpoint_sha256"] = checkpoint_sha
        self._doc.update(extra)
        if wallclock_enabled():
            self._doc["wall_s"] = round(self._clock.seconds(), 3)
        return self

    def to_dict(self):
        return dict(self._doc)

    def save(self, path):
        write_json(self._doc, path)


def result_row(ratio, seed, split, acc, miou, epochs, wall_s=0.0):
    return {
        "ratio": f"{ratio:g}",
        "seed": str(seed),
        "split": split,
        "acc": f"{acc:.6f}",
        "miou": f"{miou:.6f}",
        "epochs": str(epochs),
        "wall_s": f"{wall_s:.3f}",
    }


def format_csv(rows, header=CSV_HEADER):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(path, rows, header=CSV_HEADER):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows, header))

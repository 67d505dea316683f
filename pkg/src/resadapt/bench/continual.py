"""Domain-class incremental runs over a task stream.

run_continual trains tasks in order. For task i it first computes frozen
feature statistics, then trains the attachments, appends the immutable pool
entry, and evaluates every task's test split with the pool as it stands,
filling row i of the accuracy matrix. Entries for j <= i use learned
adapters; entries for j > i measure what the partly-trained system does on
data it has never seen (with calibration on, effectively the frozen model).
"""

from __future__ import annotations

import numpy as np

from ..backbone import DualEncoder, class_embeddings, encode
from ..errors import ConfigError
from ..learner import (
    AdapterMode,
    PoolEntry,
    TaskPool,
    TrainConfig,
    estimate_task_stats,
    infer_batch,
    train_task,
    zero_shot_infer,
)
from ..numkernel import make_rng
from ..taskdist import log_density_batch
from .stream import Task


def evaluate_task(
    task: Task,
    pool: TaskPool,
    enc: DualEncoder,
    calibrate: bool = True,
    logit_scale: float = 100.0,
) -> float:
    """Accuracy of pooled inference on one task's test split."""
    class_idx, _, _ = infer_batch(
        task.test_ids, pool, task.class_templates, enc, calibrate, logit_scale
    )
    return float((class_idx == task.test_labels).mean())


def run_continual(
    stream: list[Task],
    enc: DualEncoder,
    cfg: TrainConfig,
    calibrate: bool = True,
    mode: str | AdapterMode = "iki",
) -> tuple[np.ndarray, TaskPool]:
    """Train the stream in order; returns (accuracy matrix, final pool)."""
    if isinstance(mode, str):
        mode = AdapterMode.parse(mode)
    if not stream:
        raise ConfigError("empty task stream")
    n = len(stream)
    pool = TaskPool(entries=[], kind=mode.mechanism)
    matrix = np.zeros((n, n))
    for i, task in enumerate(stream):
        # Statistics first, on the frozen encoder; training cannot bias them.
        gaussian, mean_key = estimate_task_stats(task.train_ids, enc, cfg.ridge)
        adapters = train_task(
            task.train_ids,
            task.train_labels,
            task.class_templates,
            enc,
            cfg,
            make_rng(cfg.seed, 23, i),
            mode,
        )
        pool.entries.append(
            PoolEntry(
                adapters=adapters,
                gaussian=gaussian,
                mean_key=mean_key,
                class_templates=task.class_templates,
            )
        )
        for j, other in enumerate(stream):
            matrix[i, j] = evaluate_task(other, pool, enc, calibrate, cfg.logit_scale)
    return matrix, pool


def zero_shot_sweep(
    stream: list[Task], enc: DualEncoder, logit_scale: float = 100.0
) -> list[float]:
    """Frozen-model accuracy per task (no pool, no adapters)."""
    out = []
    for task in stream:
        correct = sum(
            int(zero_shot_infer(ids, task.class_templates, enc, logit_scale) == int(label))
            for ids, label in zip(task.test_ids, task.test_labels)
        )
        out.append(correct / len(task.test_labels))
    return out


def assignment_accuracy(stream: list[Task], pool: TaskPool, enc: DualEncoder) -> float:
    """Task-selection accuracy over learned tasks at every checkpoint.

    For each prefix pool of size i+1 and each task j <= i, the fraction of
    task j's test samples whose best-scoring Gaussian is j. Entries are
    immutable, so prefix pools reproduce the pool exactly as it stood.
    """
    feats = [encode(t.test_ids, enc.image) for t in stream]
    correct = total = 0
    for i in range(len(pool.entries)):
        gaussians = [e.gaussian for e in pool.entries[: i + 1]]
        for j in range(i + 1):
            scores = np.stack([log_density_batch(g, feats[j]) for g in gaussians], axis=1)
            correct += int((np.argmax(scores, axis=1) == j).sum())
            total += feats[j].shape[0]
    return correct / total


def manual_weight_sweep(
    task: Task,
    entry: PoolEntry,
    enc: DualEncoder,
    weights: list[float],
    logit_scale: float = 100.0,
) -> dict[float, float]:
    """Accuracy on one task while the residual weight is pinned by hand.

    Bypasses selection and calibration entirely: the given entry's adapters
    are applied at each fixed w to both encoders. w=0 is exactly the frozen
    model; w=1 is full strength.
    """
    out = {}
    for w in weights:
        feats = encode(task.test_ids, enc.image, entry.adapters.image_adapters, float(w))
        text = class_embeddings(
            task.class_templates, enc.text, entry.adapters.text_adapters, float(w)
        )
        preds = np.argmax(feats @ text.T, axis=1)
        out[float(w)] = float((preds == task.test_labels).mean())
    return out

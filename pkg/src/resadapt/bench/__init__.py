"""Benchmark harness: streams, continual runs, metrics, verifiers, CLI."""

from .continual import run_continual, zero_shot_sweep
from .metrics import metric_avg, metric_last, metric_transfer
from .stream import StreamSpec, Task, gen_stream
from .verify import run_suite

__all__ = [
    "StreamSpec",
    "Task",
    "gen_stream",
    "metric_avg",
    "metric_last",
    "metric_transfer",
    "run_continual",
    "run_suite",
    "zero_shot_sweep",
]

"""Self-contained numerical verifiers, runnable from the CLI.

Four suites:

  zero-init       fresh adapters leave encoder outputs identical to the
                  frozen model (the no-interference identity)
  gradcheck       analytic adapter gradients against central differences
  degenerate-init all-zero keys AND values freeze the keys forever and
                  force all value rows to stay pairwise identical; random
                  keys break the degeneracy and let the loss fall
  metrics         transfer/avg/last against hand values and brute force

Each check contributes one line to the report; a suite passes when every
line does.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..attention import (
    Adapter,
    adapter_grads,
    init_adapter,
    random_frozen_attention,
    residual_forward,
)
from ..backbone import build_dual_encoder, encode
from ..learner import TrainConfig
from ..numkernel import finite_diff_grad, make_rng
from .metrics import metric_avg, metric_last, metric_transfer


@dataclass
class VerifyReport:
    suite: str
    passed: bool = True
    lines: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.passed = self.passed and ok
        tag = "PASS" if ok else "FAIL"
        self.lines.append(f"{tag} {name}" + (f" ({detail})" if detail else ""))


def verify_zero_init_identity(seed: int = 0, n_inputs: int = 100) -> VerifyReport:
    """Fresh adapters at several depths must leave features bit-unchanged."""
    t0 = time.monotonic()
    report = VerifyReport(suite="zero-init")
    enc = build_dual_encoder(vocab=256, d=32, depth=2, seed=seed)
    rng = make_rng(seed, 41)
    cfg = TrainConfig()
    worst = 0.0
    for depth in (1, 2):
        for stack in (enc.image, enc.text):
            for _ in range(n_inputs // 4):
                ids = rng.integers(0, stack.vocab, size=8)
                adapters = [
                    init_adapter(cfg.prompt_len, stack.d, cfg.k_bound, rng)
                    for _ in range(depth)
                ]
                w = float(rng.uniform(0.0, 1.0))
                plain = encode(ids, stack)
                adapted = encode(ids, stack, adapters, w)
                worst = max(worst, float(np.max(np.abs(adapted - plain))))
    report.check(
        f"fresh adapters leave {n_inputs} random encodings unchanged",
        worst <= 1e-12,
        f"max deviation {worst:.3e}",
    )
    report.elapsed = time.monotonic() - t0
    return report


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-8)
    return float(np.max(np.abs(a - b))) / scale


def verify_gradcheck(trials: int = 50, seed: int = 0, h: float = 1e-5) -> VerifyReport:
    """Analytic adapter gradients vs central differences on random instances."""
    t0 = time.monotonic()
    report = VerifyReport(suite="gradcheck")
    rng = make_rng(seed, 42)
    worst = 0.0
    for trial in range(trials):
        seq_len = int(rng.integers(2, 6))
        l = int(rng.integers(1, 5))
        d = int(rng.integers(2, 8))
        p = random_frozen_attention(d, rng)
        x = rng.normal(0.0, 1.0, size=(seq_len, d))
        a = Adapter(k_r=rng.normal(0.0, 0.5, size=(l, d)), v_r=rng.normal(0.0, 0.5, size=(l, d)))
        if trial % 7 == 0:
            a = Adapter(k_r=a.k_r, v_r=np.zeros((l, d)))  # fresh-value corner
        w = 0.0 if trial % 11 == 0 else float(rng.uniform(0.0, 1.0))
        d_out = rng.normal(0.0, 1.0, size=(seq_len, d))
        g_k, g_v = adapter_grads(x, p, a, w, d_out)
        fd_k = finite_diff_grad(
            lambda k_mat: float(
                (d_out * residual_forward(x, p, Adapter(k_r=k_mat, v_r=a.v_r), w)).sum()
            ),
            a.k_r,
            h,
        )
        fd_v = finite_diff_grad(
            lambda v_mat: float(
                (d_out * residual_forward(x, p, Adapter(k_r=a.k_r, v_r=v_mat), w)).sum()
            ),
            a.v_r,
            h,
        )
        worst = max(worst, _rel_err(g_k, fd_k), _rel_err(g_v, fd_v))
    report.check(
        f"{trials} random instances, analytic vs central differences",
        worst <= 1e-4,
        f"worst relative error {worst:.3e}",
    )
    report.elapsed = time.monotonic() - t0
    return report


def verify_degenerate_init(
    steps: int = 10, seed: int = 0, dims: tuple[int, int, int] = (2, 3, 2)
) -> VerifyReport:
    """All-zero initialization is a fixed point of the key gradient.

    Uses a single residual layer, squared-error loss against a random
    target, and plain SGD. With k_r = v_r = 0: the key gradient is exactly
    zero at every step and the value rows stay pairwise identical, so the
    layer can only learn one shared vector. The control run (random keys,
    zero values) must break row equality after the first step and reduce
    the loss.
    """
    t0 = time.monotonic()
    report = VerifyReport(suite="degenerate-init")
    l, d, seq_len = dims
    rng = make_rng(seed, 43)
    p = random_frozen_attention(d, rng)
    x = rng.normal(0.0, 1.0, size=(seq_len, d))
    target = rng.normal(0.0, 1.0, size=(seq_len, d))
    lr = 0.2

    def loss_and_grad(a: Adapter) -> tuple[float, np.ndarray, np.ndarray]:
        out = residual_forward(x, p, a, 1.0)
        diff = out - target
        g_k, g_v = adapter_grads(x, p, a, 1.0, diff)
        return 0.5 * float((diff * diff).sum()), g_k, g_v

    # (a) fully degenerate start.
    a = Adapter(k_r=np.zeros((l, d)), v_r=np.zeros((l, d)))
    max_dk = 0.0
    max_row_spread = 0.0
    for _ in range(steps):
        _, g_k, g_v = loss_and_grad(a)
        max_dk = max(max_dk, float(np.max(np.abs(g_k))))
        a = Adapter(k_r=a.k_r - lr * g_k, v_r=a.v_r - lr * g_v)
        spread = float(np.max(np.abs(a.v_r - a.v_r[0])))
        max_row_spread = max(max_row_spread, spread)
    report.check(
        f"zero init: key gradient stays zero over {steps} steps",
        max_dk <= 1e-15,
        f"max |dK| {max_dk:.3e}",
    )
    report.check(
        "zero init: value rows stay pairwise identical",
        max_row_spread <= 1e-12,
        f"max row spread {max_row_spread:.3e}",
    )
    # Once rows are equal the output cannot depend on the keys at all.
    loss_a, _, _ = loss_and_grad(a)
    perturbed = Adapter(k_r=rng.normal(0.0, 1.0, size=(l, d)), v_r=a.v_r)
    loss_b, _, _ = loss_and_grad(perturbed)
    report.check(
        "zero init: loss is flat in the keys",
        abs(loss_a - loss_b) <= 1e-12,
        f"|delta| {abs(loss_a - loss_b):.3e}",
    )

    # (b) control: random keys, zero values.
    a = init_adapter(l, d, 0.5, rng)
    losses = []
    spread_after_first = None
    for step in range(steps):
        loss, g_k, g_v = loss_and_grad(a)
        losses.append(loss)
        a = Adapter(k_r=a.k_r - lr * g_k, v_r=a.v_r - lr * g_v)
        if step == 0:
            spread_after_first = float(np.max(np.abs(a.v_r - a.v_r[0])))
    final_loss, _, _ = loss_and_grad(a)
    report.check(
        "random keys: value rows differ after one step",
        spread_after_first is not None and spread_after_first > 0.0,
        f"row spread {spread_after_first:.3e}",
    )
    report.check(
        f"random keys: loss decreases over {steps} steps",
        final_loss < losses[0],
        f"{losses[0]:.6f} -> {final_loss:.6f}",
    )
    report.elapsed = time.monotonic() - t0
    return report


def _brute_force_metrics(p: np.ndarray) -> tuple[list[float], list[float], list[float]]:
    n = p.shape[0]
    transfer = []
    for j in range(1, n):
        acc = 0.0
        for i in range(j):
            acc += p[i][j]
        transfer.append(acc / j)
    avg = []
    for j in range(n):
        acc = 0.0
        for i in range(n):
            acc += p[i][j]
        avg.append(acc / n)
    last = [p[n - 1][j] for j in range(n)]
    return transfer, avg, last


def verify_metrics(seed: int = 0, n_random: int = 100) -> VerifyReport:
    """Hand-checked 2x2 case plus random matrices against a loop oracle."""
    t0 = time.monotonic()
    report = VerifyReport(suite="metrics")
    p = np.array([[0.80, 0.50], [0.75, 0.90]])
    t_per, t_agg = metric_transfer(p)
    a_per, a_agg = metric_avg(p)
    l_per, l_agg = metric_last(p)
    report.check("2x2 transfer", t_per == [0.50] and t_agg == 0.50, f"{t_per} agg {t_agg}")
    report.check(
        "2x2 avg",
        np.allclose(a_per, [0.775, 0.70], atol=1e-15) and abs(a_agg - 0.7375) <= 1e-15,
        f"{a_per} agg {a_agg}",
    )
    report.check(
        "2x2 last",
        l_per == [0.75, 0.90] and abs(l_agg - 0.825) <= 1e-15,
        f"{l_per} agg {l_agg}",
    )
    rng = make_rng(seed, 44)
    worst = 0.0
    for _ in range(n_random):
        n = int(rng.integers(2, 9))
        p = rng.uniform(0.0, 1.0, size=(n, n))
        bt, ba, bl = _brute_force_metrics(p)
        t_per, t_agg = metric_transfer(p)
        a_per, a_agg = metric_avg(p)
        l_per, l_agg = metric_last(p)
        worst = max(
            worst,
            float(np.max(np.abs(np.array(t_per) - np.array(bt)))),
            abs(t_agg - float(np.mean(bt))),
            float(np.max(np.abs(np.array(a_per) - np.array(ba)))),
            abs(a_agg - float(np.mean(ba))),
            float(np.max(np.abs(np.array(l_per) - np.array(bl)))),
            abs(l_agg - float(np.mean(bl))),
        )
    report.check(
        f"{n_random} random matrices vs loop oracle",
        worst <= 1e-12,
        f"max deviation {worst:.3e}",
    )
    report.elapsed = time.monotonic() - t0
    return report


SUITES = {
    "zero-init": verify_zero_init_identity,
    "gradcheck": verify_gradcheck,
    "degenerate-init": verify_degenerate_init,
    "metrics": verify_metrics,
}


def run_suite(name: str, seed: int = 0) -> list[VerifyReport]:
    """Run one suite or all of them; unknown names raise KeyError."""
    if name == "all":
        return [fn(seed=seed) for fn in SUITES.values()]
    return [SUITES[name](seed=seed)]

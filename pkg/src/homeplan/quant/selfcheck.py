"""Quick property checks of the quantization math, runnable from the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from homeplan.quant import nf4
from homeplan.quant.qlora import LoraAdapter, adapter_gradients, qlora_forward


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _brute_force_codes(x: np.ndarray, levels: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, i.e. the lower index on ties
    return np.argmin(np.abs(x[..., None] - levels), axis=-1)


def check_codebook_shape(levels, rng):
    ok = len(levels) == 16 and levels[0] == -1.0 and levels[-1] == 1.0 and int(np.sum(levels == 0.0)) == 1
    return ok, f"first={float(levels[0])} last={float(levels[-1])} zeros={int(np.sum(levels == 0.0))}"


def check_codebook_monotone(levels, rng):
    diffs = np.diff(levels)
    return bool(np.all(diffs > 0)), f"min gap={diffs.min():.3g}"


def check_codebook_recompute(levels, rng):
    err = float(np.max(np.abs(levels - np.array(nf4.reference_levels()))))
    return err <= 1e-12, f"max deviation={err:.3g}"


def check_nearest_level(levels, rng, blocks=2000):
    x = rng.uniform(-1.0, 1.0, size=(blocks, nf4.BLOCK_SIZE))
    x /= np.abs(x).max(axis=1, keepdims=True)
    got = nf4.nearest_codes(x, levels)
    want = _brute_force_codes(x, levels)
    mismatches = int(np.sum(got != want))
    return mismatches == 0, f"{mismatches} mismatches over {x.size} values"


def check_roundtrip_bound(levels, rng, blocks=2000):
    scales = np.exp(rng.uniform(-8, 4, size=(blocks, 1)))
    w = rng.normal(size=(blocks, nf4.BLOCK_SIZE)) * scales
    qt = nf4.quantize_nf4(w, levels=levels)
    err = np.abs(w - nf4.double_dequant(qt, levels))
    bound = nf4.error_bound(w, qt, levels)
    violations = int(np.sum(err > bound))
    return violations == 0, f"{violations} violations, worst ratio={float(np.max(err / bound)):.3f}"


def check_zero_block(levels, rng):
    qt = nf4.quantize_nf4(np.zeros((3, 100)), levels=levels)
    zero = nf4.zero_code(levels) if np.any(levels == 0.0) else -1
    ok = (
        np.all(qt.codes == zero)
        and np.all(qt.c2 == 0)
        and np.array_equal(nf4.double_dequant(qt, levels), np.zeros((3, 100)))
    )
    return bool(ok), ""


def check_idempotence(levels, rng):
    w = rng.normal(size=(37, 129))
    once = nf4.double_dequant(nf4.quantize_nf4(w, levels=levels), levels)
    twice = nf4.double_dequant(nf4.quantize_nf4(once, levels=levels), levels)
    return bool(np.array_equal(once, twice)), ""


def check_storage(levels, rng):
    n = nf4.BLOCK_SIZE * nf4.GROUP_SIZE * 3
    got = nf4.bits_per_element(n)
    want = Fraction(4) + Fraction(8, 64) + Fraction(32, 64 * 256)
    return got == want, f"{got} bits/element"


def _naive_forward(X, W, L1, L2):
    n, d = X.shape
    k = W.shape[1]
    r = L1.shape[1]
    Y = np.zeros((n, k))
    for i in range(n):
        for j in range(k):
            acc = 0.0
            for t in range(d):
                acc += X[i, t] * W[t, j]
                for s in range(r):
                    acc += X[i, t] * L1[t, s] * L2[s, j]
            Y[i, j] = acc
    return Y


def check_forward(levels, rng, instances=20):
    worst = 0.0
    for _ in range(instances):
        n, d, k, r = (int(v) for v in rng.integers(1, 7, size=4))
        X = rng.normal(size=(n, d))
        qt = nf4.quantize_nf4(rng.normal(size=(d, k)), levels=levels)
        adapter = LoraAdapter(rng.normal(size=(d, r)), rng.normal(size=(r, k)))
        Y = qlora_forward(X, qt, adapter)
        W = nf4.double_dequant(qt)
        worst = max(worst, float(np.max(np.abs(Y - _naive_forward(X, W, adapter.L1, adapter.L2)))))
    return worst <= 1e-10, f"max abs error={worst:.3g}"


def check_gradients(levels, rng, instances=20, h=1e-5):
    worst = 0.0
    for _ in range(instances):
        X = rng.normal(size=(3, 4))
        qt = nf4.quantize_nf4(rng.normal(size=(4, 2)), levels=levels)
        adapter = LoraAdapter(rng.normal(size=(4, 2)), rng.normal(size=(2, 2)))
        Y = qlora_forward(X, qt, adapter)
        dL1, dL2 = adapter_gradients(X, qt, adapter, Y)  # loss = 0.5 * ||Y||^2
        for analytic, matrix in ((dL1, adapter.L1), (dL2, adapter.L2)):
            for idx in np.ndindex(matrix.shape):
                orig = matrix[idx]
                matrix[idx] = orig + h
                up = 0.5 * np.sum(qlora_forward(X, qt, adapter) ** 2)
                matrix[idx] = orig - h
                down = 0.5 * np.sum(qlora_forward(X, qt, adapter) ** 2)
                matrix[idx] = orig
                numeric = (up - down) / (2 * h)
                rel = abs(numeric - analytic[idx]) / max(abs(numeric), abs(analytic[idx]), 1e-8)
                worst = max(worst, rel)
    return worst <= 1e-6, f"max relative error={worst:.3g}"


CHECKS: list[tuple[str, Callable]] = [
    ("codebook endpoints and zero level", check_codebook_shape),
    ("codebook strictly increasing", check_codebook_monotone),
    ("codebook matches independent recomputation", check_codebook_recompute),
    ("nearest-level codes match brute force", check_nearest_level),
    ("round-trip error within analytical bound", check_roundtrip_bound),
    ("zero matrix round trip is exact", check_zero_block),
    ("requantizing a dequantized matrix is a fixed point", check_idempotence),
    ("storage is 4 + 8/64 + 32/16384 bits per element", check_storage),
    ("forward pass matches naive evaluation", check_forward),
    ("adapter gradients match central differences", check_gradients),
]


def run_selfcheck(levels: np.ndarray | None = None, seed: int = 0) -> list[CheckResult]:
    levels = nf4.nf4_codebook() if levels is None else np.asarray(levels, dtype=np.float64)
    results = []
    for name, check in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            passed, detail = check(levels, rng)
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail))
    return results

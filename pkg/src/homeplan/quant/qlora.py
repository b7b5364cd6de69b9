"""Linear layer with a frozen NF4 base weight and a trainable low-rank adapter.

    Y = X @ dequant(W) + X @ L1 @ L2

No scaling factor is applied to the adapter term. Only the adapter factors
get gradients; the quantized weight is frozen.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from homeplan.quant.nf4 import QuantizedTensor, double_dequant


class DimensionMismatch(ValueError):
    pass


@dataclass
class LoraAdapter:
    L1: np.ndarray  # d x r
    L2: np.ndarray  # r x k
    target_layer: str = "q_proj"

    def __post_init__(self) -> None:
        self.L1 = np.asarray(self.L1, dtype=np.float64)
        self.L2 = np.asarray(self.L2, dtype=np.float64)
        if self.L1.ndim != 2 or self.L2.ndim != 2:
            raise DimensionMismatch("adapter factors must be matrices")
        if self.L1.shape[1] != self.L2.shape[0]:
            raise DimensionMismatch(f"inner dimensions differ: L1 {self.L1.shape}, L2 {self.L2.shape}")
        if self.rank < 1:
            raise DimensionMismatch("adapter rank must be at least 1")

    @property
    def rank(self) -> int:
        return self.L1.shape[1]

    @classmethod
    def init(cls, d: int, k: int, rank: int, rng: np.random.Generator, target_layer: str = "q_proj") -> "LoraAdapter":
        """Usual LoRA start: random L1, zero L2, so the adapter begins as a no-op."""
        return cls(rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, rank)), np.zeros((rank, k)), target_layer)


def _check(X: np.ndarray, qt: QuantizedTensor, adapter: LoraAdapter) -> None:
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be a matrix, got shape {X.shape}")
    d, k = qt.shape
    if X.shape[1] != d:
        raise DimensionMismatch(f"X has {X.shape[1]} columns but the weight has {d} rows")
    if adapter.L1.shape[0] != d or adapter.L2.shape[1] != k:
        raise DimensionMismatch(
            f"adapter {adapter.L1.shape} x {adapter.L2.shape} does not fit a {d} x {k} weight"
        )


def qlora_forward(X, qt: QuantizedTensor, adapter: LoraAdapter) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    _check(X, qt, adapter)
    return X @ double_dequant(qt) + (X @ adapter.L1) @ adapter.L2


def adapter_gradients(X, qt: QuantizedTensor, adapter: LoraAdapter, dY) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of a loss w.r.t. L1 and L2 given the upstream gradient dY = dE/dY.

    dL1 = X^T dY L2^T and dL2 = (X L1)^T dY. The frozen weight gets none.
    """
    X = np.asarray(X, dtype=np.float64)
    dY = np.asarray(dY, dtype=np.float64)
    _check(X, qt, adapter)
    if dY.shape != (X.shape[0], qt.shape[1]):
        raise DimensionMismatch(f"dY has shape {dY.shape}, expected {(X.shape[0], qt.shape[1])}")
    dL1 = X.T @ (dY @ adapter.L2.T)
    dL2 = (X @ adapter.L1).T @ dY
    return dL1, dL2


def input_gradient(X, qt: QuantizedTensor, adapter: LoraAdapter, dY) -> np.ndarray:
    """dE/dX, the path that needs the base weight dequantized during backprop."""
    X = np.asarray(X, dtype=np.float64)
    _check(X, qt, adapter)
    dY = np.asarray(dY, dtype=np.float64)
    return dY @ double_dequant(qt).T + (dY @ adapter.L2.T) @ adapter.L1.T

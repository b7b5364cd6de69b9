"""4-bit NormalFloat block quantization with double-quantized block constants.

Layout of a quantized matrix (row-major, flattened):

* ``codes``: one 4-bit level index per element, in blocks of 64 elements;
* ``c2``: one E4M3 byte per block, the block's absmax divided by its group
  constant;
* ``c1``: one float32 per group of 256 consecutive blocks, the largest block
  absmax in the group.

Dequantization first rebuilds each block's absmax as ``decode(c2) * c1`` and
then scales the codebook level of every element by it.

Codebook construction
---------------------
With ``Phi^-1`` the standard-normal quantile function and the probability
offset ``delta = 1 - (1/32 + 1/30) / 2``:

* positive side: ``Phi^-1(p)`` for the first 8 of 9 evenly spaced ``p`` from
  ``delta`` down to 0.5 (0.5 itself dropped);
* negative side: ``-Phi^-1(p)`` for the first 7 of 8 evenly spaced ``p`` from
  ``delta`` down to 0.5;
* an exact zero.

All 16 values are divided by ``Phi^-1(delta)``, so the extremes are exactly -1
and +1. This reproduces the standard NF4 table (7 negative levels, zero,
8 positive levels).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from homeplan.quant import fp8

BLOCK_SIZE = 64
GROUP_SIZE = 256
CODE_BITS = 4
C2_BITS = 8
C1_BITS = 32
NF4_OFFSET = 1.0 - 0.5 * (1.0 / 32.0 + 1.0 / 30.0)


class NonFiniteInput(ValueError):
    pass


@lru_cache(maxsize=None)
def _levels() -> tuple[float, ...]:
    ppf = NormalDist().inv_cdf
    positive = [ppf(p) for p in np.linspace(NF4_OFFSET, 0.5, 9)[:-1]]
    negative = [-ppf(p) for p in np.linspace(NF4_OFFSET, 0.5, 8)[:-1]]
    scale = ppf(NF4_OFFSET)
    # The extremes are +-ppf(delta) / ppf(delta), i.e. exactly +-1.
    return tuple(sorted([v / scale for v in positive + negative] + [0.0]))


def nf4_codebook() -> np.ndarray:
    return np.array(_levels(), dtype=np.float64)


def zero_code(levels: np.ndarray | None = None) -> int:
    levels = nf4_codebook() if levels is None else levels
    return int(np.flatnonzero(levels == 0.0)[0])


def nearest_codes(normalized: np.ndarray, levels: np.ndarray | None = None) -> np.ndarray:
    """Index of the nearest level for each value; exact midpoints go to the lower index."""
    levels = nf4_codebook() if levels is None else np.asarray(levels, dtype=np.float64)
    midpoints = (levels[:-1] + levels[1:]) / 2.0
    return np.searchsorted(midpoints, normalized, side="left").astype(np.uint8)


@dataclass(frozen=True, eq=False)
class QuantizedTensor:
    shape: tuple[int, int]
    codes: np.ndarray  # uint8, one per element, values 0..15
    c2: np.ndarray  # uint8 E4M3, one per block
    c1: np.ndarray  # float32, one per group of blocks
    block_size: int = BLOCK_SIZE
    group_size: int = GROUP_SIZE

    def __post_init__(self) -> None:
        n = self.size
        if self.codes.shape != (n,):
            raise ValueError(f"expected {n} codes, got {self.codes.shape}")
        if self.c2.shape != (self.n_blocks,):
            raise ValueError(f"expected {self.n_blocks} c2 constants, got {self.c2.shape}")
        if self.c1.shape != (self.n_groups,):
            raise ValueError(f"expected {self.n_groups} c1 constants, got {self.c1.shape}")

    @property
    def size(self) -> int:
        return int(self.shape[0]) * int(self.shape[1])

    @property
    def n_blocks(self) -> int:
        return -(-self.size // self.block_size)

    @property
    def n_groups(self) -> int:
        return -(-self.n_blocks // self.group_size)

    def storage_bits(self) -> int:
        return CODE_BITS * self.size + C2_BITS * self.n_blocks + C1_BITS * self.n_groups

    def block_absmax(self) -> np.ndarray:
        """Per-block absmax as reconstructed from (c1, c2)."""
        c1 = np.repeat(self.c1.astype(np.float64), self.group_size)[: self.n_blocks]
        return fp8.decode(self.c2) * c1

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizedTensor):
            return NotImplemented
        return (
            tuple(self.shape) == tuple(other.shape)
            and (self.block_size, self.group_size) == (other.block_size, other.group_size)
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.c2, other.c2)
            and np.array_equal(self.c1.view(np.uint32), other.c1.view(np.uint32))
        )

    # Binary layout, little-endian:
    #   magic b"NF4Q", u16 version, u16 reserved,
    #   u32 rows, u32 cols, u32 block_size, u32 group_size,
    #   u64 n_codes, u32 n_c2, u32 n_c1,
    #   codes packed two per byte (element 2i in the low nibble), padded to a byte,
    #   n_c2 bytes of E4M3 constants,
    #   n_c1 float32 constants.
    _HEADER = struct.Struct("<4sHHIIIIQII")
    MAGIC = b"NF4Q"
    VERSION = 1

    def to_bytes(self) -> bytes:
        codes = self.codes
        if codes.size % 2:
            codes = np.append(codes, np.uint8(0))
        packed = (codes[0::2] & 0xF) | ((codes[1::2] & 0xF) << 4)
        header = self._HEADER.pack(
            self.MAGIC, self.VERSION, 0,
            self.shape[0], self.shape[1], self.block_size, self.group_size,
            self.size, self.n_blocks, self.n_groups,
        )
        return header + packed.astype(np.uint8).tobytes() + self.c2.tobytes() + self.c1.astype("<f4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "QuantizedTensor":
        h = cls._HEADER
        if len(data) < h.size:
            raise ValueError("truncated header")
        magic, version, _, rows, cols, block, group, n_codes, n_c2, n_c1 = h.unpack_from(data)
        if magic != cls.MAGIC or version != cls.VERSION:
            raise ValueError("not an NF4Q v1 blob")
        n_packed = (n_codes + 1) // 2
        expected = h.size + n_packed + n_c2 + 4 * n_c1
        if len(data) != expected:
            raise ValueError(f"expected {expected} bytes, got {len(data)}")
        offset = h.size
        packed = np.frombuffer(data, np.uint8, n_packed, offset)
        offset += n_packed
        codes = np.empty(2 * n_packed, dtype=np.uint8)
        codes[0::2] = packed & 0xF
        codes[1::2] = packed >> 4
        c2 = np.frombuffer(data, np.uint8, n_c2, offset).copy()
        offset += n_c2
        c1 = np.frombuffer(data, "<f4", n_c1, offset).astype(np.float32)
        return cls((rows, cols), codes[:n_codes].copy(), c2, c1, block, group)


def bits_per_element(n_elements: int, block_size: int = BLOCK_SIZE, group_size: int = GROUP_SIZE) -> Fraction:
    n_blocks = -(-n_elements // block_size)
    n_groups = -(-n_blocks // group_size)
    return Fraction(CODE_BITS * n_elements + C2_BITS * n_blocks + C1_BITS * n_groups, n_elements)


def quantize_nf4(
    weights,
    block_size: int = BLOCK_SIZE,
    group_size: int = GROUP_SIZE,
    levels: np.ndarray | None = None,
) -> QuantizedTensor:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise NonFiniteInput("weights contain NaN or infinity")
    levels = nf4_codebook() if levels is None else np.asarray(levels, dtype=np.float64)

    n = w.size
    n_blocks = -(-n // block_size)
    n_groups = -(-n_blocks // group_size)
    blocks = np.zeros(n_blocks * block_size)
    blocks[:n] = w.ravel()
    blocks = blocks.reshape(n_blocks, block_size)
    absmax = np.abs(blocks).max(axis=1)

    grouped = np.zeros(n_groups * group_size)
    grouped[:n_blocks] = absmax
    with np.errstate(over="ignore"):
        c1 = grouped.reshape(n_groups, group_size).max(axis=1).astype(np.float32)
    if not np.all(np.isfinite(c1)):
        raise OverflowError("block absmax exceeds the float32 range of the group constant")

    c1_per_block = np.repeat(c1.astype(np.float64), group_size)[:n_blocks]
    ratio = np.divide(absmax, c1_per_block, out=np.zeros(n_blocks), where=c1_per_block > 0)
    c2 = fp8.encode(ratio)

    scale = absmax[:, None]
    normalized = np.divide(blocks, scale, out=np.zeros_like(blocks), where=scale > 0)
    codes = nearest_codes(normalized, levels).ravel()[:n]
    return QuantizedTensor(tuple(w.shape), codes, c2, c1, block_size, group_size)


def double_dequant(qt: QuantizedTensor, levels: np.ndarray | None = None) -> np.ndarray:
    levels = nf4_codebook() if levels is None else np.asarray(levels, dtype=np.float64)
    absmax = qt.block_absmax()  # inner dequant: constants from (c1, c2)
    per_element = np.repeat(absmax, qt.block_size)[: qt.size]
    return (levels[qt.codes] * per_element).reshape(qt.shape)  # outer dequant: codes


def error_bound(weights, qt: QuantizedTensor, levels: np.ndarray | None = None) -> np.ndarray:
    """Per-element bound on |W - double_dequant(quantize(W))|.

    Rounding to the nearest level costs at most ``absmax * g / 2`` (``g`` the
    widest gap between adjacent levels). Storing the absmax in E4M3 costs
    at most half an E4M3 step times ``c1``, scaled by the element's level.
    A few ulps of slack cover float64 arithmetic.
    """
    levels = nf4_codebook() if levels is None else np.asarray(levels, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64).ravel()
    n = w.size
    gap = float(np.max(np.diff(levels)))

    padded = np.zeros(qt.n_blocks * qt.block_size)
    padded[:n] = np.abs(w)
    absmax = padded.reshape(qt.n_blocks, qt.block_size).max(axis=1)
    c1 = np.repeat(qt.c1.astype(np.float64), qt.group_size)[: qt.n_blocks]
    ratio = np.divide(absmax, c1, out=np.zeros_like(absmax), where=c1 > 0)
    absmax_error = c1 * fp8.spacing(ratio) / 2.0

    a = np.repeat(absmax, qt.block_size)[:n]
    da = np.repeat(absmax_error, qt.block_size)[:n]
    level = np.abs(levels[qt.codes])
    slack = 8 * np.finfo(np.float64).eps * (a + da)
    return (a * gap / 2.0 + level * da + slack).reshape(qt.shape)


def reference_levels() -> list[float]:
    """Independent route to the codebook: invert the normal CDF by bisection on ``math.erfc``."""

    def ppf(p: float) -> float:
        lo, hi = -10.0, 10.0
        for _ in range(200):
            mid = (lo + hi) / 2.0
            if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2.0

    def spaced(start: float, stop: float, count: int) -> list[float]:
        return [start + (stop - start) * i / (count - 1) for i in range(count)]

    scale = ppf(NF4_OFFSET)
    positive = [ppf(p) / scale for p in spaced(NF4_OFFSET, 0.5, 9)[:-1]]
    negative = [-ppf(p) / scale for p in spaced(NF4_OFFSET, 0.5, 8)[:-1]]
    return sorted(positive + negative + [0.0])

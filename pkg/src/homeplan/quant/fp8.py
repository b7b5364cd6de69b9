"""FP8 E4M3 (1 sign, 4 exponent bits with bias 7, 3 mantissa bits).

The finite-only variant: no infinities, ``S.1111.111`` is NaN, and the largest
finite magnitude is 448. Encoding rounds to nearest, ties to even, and
saturates at +-448.
"""

from __future__ import annotations

import numpy as np

BIAS = 7
MANTISSA_BITS = 3
MAX_VALUE = 448.0
MIN_NORMAL = 2.0**-6
MIN_SUBNORMAL = 2.0**-9
NAN_CODE = 0x7F


def _decode_one(code: int) -> float:
    sign = -1.0 if code & 0x80 else 1.0
    exponent = (code >> 3) & 0xF
    mantissa = code & 0x7
    if exponent == 0xF and mantissa == 0x7:
        return float("nan")
    if exponent == 0:
        return sign * mantissa * MIN_SUBNORMAL
    return sign * (1.0 + mantissa / 8.0) * 2.0 ** (exponent - BIAS)


DECODE_TABLE = np.array([_decode_one(c) for c in range(256)], dtype=np.float64)


def decode(codes) -> np.ndarray:
    return DECODE_TABLE[np.asarray(codes, dtype=np.uint8)]


def _binade(a: np.ndarray) -> np.ndarray:
    """floor(log2 a), clamped to the subnormal exponent -6 (zero included)."""
    _, e = np.frexp(a)  # a = m * 2**e with m in [0.5, 1)
    return np.where(a > 0, np.maximum(e - 1, -6), -6)


def encode(values) -> np.ndarray:
    """Encode reals as E4M3 codes (uint8), round-to-nearest-even, saturating."""
    x = np.asarray(values, dtype=np.float64)
    nan = np.isnan(x)
    sign = np.signbit(x)
    a = np.minimum(np.abs(np.where(nan, 0.0, x)), MAX_VALUE)

    exponent = _binade(a)
    step = np.ldexp(1.0, exponent - MANTISSA_BITS)
    q = np.rint(a / step).astype(np.int64)  # np.rint rounds half to even

    # q == 16 means rounding carried into the next binade.
    carry = q == 16
    exponent = np.where(carry, exponent + 1, exponent)
    q = np.where(carry, 8, q)

    normal = q >= 8
    code = np.where(normal, ((exponent + BIAS) << 3) | (q - 8), q)
    code = np.where(sign, code | 0x80, code)
    code = np.where(nan, NAN_CODE, code)
    return code.astype(np.uint8)


def round_trip(values) -> np.ndarray:
    return decode(encode(values))


def spacing(values) -> np.ndarray:
    """Distance between adjacent E4M3 values in the binade containing each |value|."""
    a = np.abs(np.asarray(values, dtype=np.float64))
    return np.ldexp(1.0, _binade(a) - MANTISSA_BITS)

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from homeplan.quant import fp8, nf4
from homeplan.quant.nf4 import NonFiniteInput, QuantizedTensor, double_dequant, nf4_codebook, quantize_nf4
from homeplan.quant.qlora import DimensionMismatch, LoraAdapter, adapter_gradients, input_gradient, qlora_forward

LEVELS = nf4_codebook()


# --- oracles ---------------------------------------------------------------


def e4m3_values():
    """All non-negative finite E4M3 values by direct bit decoding, keyed by code."""
    out = {}
    for code in range(0x7F):
        e, m = code >> 3, code & 7
        out[code] = m / 8 * 2.0**-6 if e == 0 else (1 + m / 8) * 2.0 ** (e - 7)
    return out


E4M3 = e4m3_values()


def e4m3_encode_oracle(x):
    x = min(x, 448.0)
    best = min(E4M3.items(), key=lambda kv: (abs(kv[1] - x), kv[0] & 1))
    return best[0]


def mp_levels():
    mpmath.mp.dps = 40
    delta = 1 - (mpmath.mpf(1) / 32 + mpmath.mpf(1) / 30) / 2
    ppf = lambda p: mpmath.sqrt(2) * mpmath.erfinv(2 * p - 1)
    pos = [ppf(delta + (mpmath.mpf("0.5") - delta) * i / 8) for i in range(8)]
    neg = [-ppf(delta + (mpmath.mpf("0.5") - delta) * i / 7) for i in range(7)]
    scale = ppf(delta)
    return sorted(float(v / scale) for v in pos + neg + [mpmath.mpf(0)])


def naive_forward(X, W, L1, L2):
    n, d = X.shape
    k, r = W.shape[1], L1.shape[1]
    Y = np.zeros((n, k))
    for i in range(n):
        for j in range(k):
            base = sum(X[i, t] * W[t, j] for t in range(d))
            low = sum(X[i, t] * L1[t, s] * L2[s, j] for t in range(d) for s in range(r))
            Y[i, j] = base + low
    return Y


# --- E4M3 ------------------------------------------------------------------


def test_e4m3_table_shape():
    assert fp8.decode(0x7E) == 448.0
    assert math.isnan(fp8.decode(0x7F))
    assert fp8.decode(0x01) == 2.0**-9
    assert fp8.decode(0x38) == 1.0
    assert np.array_equal(fp8.DECODE_TABLE[:0x7F], np.array([E4M3[c] for c in range(0x7F)]))


def test_e4m3_exact_values_round_trip():
    codes = np.arange(0x7F, dtype=np.uint8)
    assert np.array_equal(fp8.encode(fp8.decode(codes)), codes)


def test_e4m3_midpoints_and_ties():
    values = sorted(E4M3.values())
    mids = [(a + b) / 2 for a, b in zip(values, values[1:])]
    got = fp8.encode(np.array(mids))
    want = [e4m3_encode_oracle(m) for m in mids]
    assert list(got) == want


@settings(max_examples=500, deadline=None)
@given(st.floats(min_value=0, max_value=1000, allow_nan=False) | st.floats(min_value=0, max_value=2.0**-5))
def test_e4m3_encode_matches_brute_force(x):
    assert int(fp8.encode(x)) == e4m3_encode_oracle(x)


def test_e4m3_saturation_sign_nan():
    assert fp8.decode(fp8.encode(1e9)) == 448.0
    assert fp8.decode(fp8.encode(-3.0)) == -3.0
    assert int(fp8.encode(np.nan)) == fp8.NAN_CODE


def test_e4m3_spacing():
    assert fp8.spacing(1.0) == 0.125
    assert fp8.spacing(0.0) == 2.0**-9
    assert fp8.spacing(300.0) == 32.0


# --- codebook ----------------------------------------------------------------


def test_codebook_endpoints_and_zero():
    assert LEVELS.shape == (16,)
    assert LEVELS[0] == -1.0 and LEVELS[15] == 1.0
    assert np.sum(LEVELS == 0.0) == 1
    assert np.all(np.diff(LEVELS) > 0)


def test_codebook_side_counts():
    assert np.sum(LEVELS < 0) == 7 and np.sum(LEVELS > 0) == 8


def test_codebook_matches_arbitrary_precision_oracle():
    assert np.max(np.abs(LEVELS - np.array(mp_levels()))) <= 1e-12


def test_codebook_matches_bisection_recomputation():
    assert np.max(np.abs(LEVELS - np.array(nf4.reference_levels()))) <= 1e-12


def test_codebook_known_values():
    # Widely published float32 table; it was built from float32 probabilities,
    # hence agreement only to about 1e-6.
    assert LEVELS[1] == pytest.approx(-0.6961928009986877, abs=1e-6)
    assert LEVELS[8] == pytest.approx(0.07958029955625534, abs=1e-6)
    assert LEVELS[14] == pytest.approx(0.7229568362236023, abs=1e-6)


# --- quantize / dequantize ---------------------------------------------------


def test_nearest_codes_brute_force_10k_blocks():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(10_000, 64))
    got = nf4.nearest_codes(x)
    want = np.argmin(np.abs(x[..., None] - LEVELS), axis=-1)
    assert np.array_equal(got, want)


def test_midpoint_ties_go_low():
    mids = (LEVELS[:-1] + LEVELS[1:]) / 2
    assert list(nf4.nearest_codes(mids)) == list(range(15))


def test_quantize_codes_match_brute_force_on_block():
    rng = np.random.default_rng(1)
    w = rng.uniform(-1, 1, size=(1, 64))
    qt = quantize_nf4(w)
    a = np.abs(w).max()
    want = np.argmin(np.abs((w / a).ravel()[:, None] - LEVELS), axis=-1)
    assert np.array_equal(qt.codes, want)


@pytest.mark.parametrize("shape", [(1, 1), (3, 100), (64, 64), (7, 13)])
def test_zero_matrix(shape):
    qt = quantize_nf4(np.zeros(shape))
    assert np.all(qt.codes == nf4.zero_code()) and np.all(qt.c2 == 0)
    assert np.array_equal(double_dequant(qt), np.zeros(shape))


def test_zero_block_among_nonzero():
    w = np.zeros((2, 64))
    w[1] = np.linspace(-2, 2, 64)
    qt = quantize_nf4(w)
    assert qt.c2[0] == 0 and np.all(qt.codes[:64] == nf4.zero_code())
    assert np.array_equal(double_dequant(qt)[0], np.zeros(64))


def test_codebook_fixed_points_round_trip_exactly():
    w = np.tile(LEVELS, 4).reshape(1, 64)
    assert np.array_equal(double_dequant(quantize_nf4(w)), w)


def test_counts():
    qt = quantize_nf4(np.ones((300, 70)))
    n = 300 * 70
    assert qt.codes.size == n
    assert qt.c2.size == -(-n // 64)
    assert qt.c1.size == -(-qt.c2.size // 256)
    assert qt.c1.dtype == np.float32


def test_bound_on_10k_blocks():
    rng = np.random.default_rng(2)
    scales = np.exp(rng.uniform(-10, 5, size=(10_000, 1)))
    w = rng.standard_t(3, size=(10_000, 64)) * scales
    qt = quantize_nf4(w)
    err = np.abs(w - double_dequant(qt))
    assert np.all(err <= nf4.error_bound(w, qt))


def test_bound_expression_matches_independent_formula():
    rng = np.random.default_rng(3)
    w = rng.normal(size=(40, 64)) * 3
    qt = quantize_nf4(w)
    g = np.max(np.diff(LEVELS))
    a = np.abs(w).max(axis=1, keepdims=True)
    c1 = float(qt.c1[0])
    ratio = a / c1
    eps8 = 2.0 ** (np.maximum(np.floor(np.log2(ratio)), -6) - 3) / 2  # half an E4M3 step
    bound = a * g / 2 + np.abs(LEVELS[qt.codes.reshape(40, 64)]) * c1 * eps8
    err = np.abs(w - double_dequant(qt))
    assert np.all(err <= bound + 1e-12 * a)


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=40), elements=st.floats(-1e6, 1e6)))
def test_idempotence(w):
    once = double_dequant(quantize_nf4(w))
    twice = double_dequant(quantize_nf4(once))
    assert np.array_equal(once, twice)


def test_shape_restored():
    w = np.random.default_rng(4).normal(size=(5, 37))
    assert double_dequant(quantize_nf4(w)).shape == (5, 37)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected(bad):
    w = np.zeros((2, 2))
    w[0, 1] = bad
    with pytest.raises(NonFiniteInput):
        quantize_nf4(w)


def test_float32_overflow_rejected():
    with pytest.raises(OverflowError):
        quantize_nf4(np.array([[1e300]]))


def test_non_matrix_rejected():
    with pytest.raises(ValueError):
        quantize_nf4(np.zeros(4))


def test_storage_accounting():
    rows, cols = 256, 64 * 3  # 768 blocks, 3 groups
    qt = quantize_nf4(np.ones((rows, cols)))
    per_element = Fraction(qt.storage_bits(), rows * cols)
    assert per_element == Fraction(4) + Fraction(8, 64) + Fraction(32, 64 * 256)
    assert nf4.bits_per_element(rows * cols) == per_element


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (64, 65), (300, 70)])
def test_serialization_round_trip(shape):
    qt = quantize_nf4(np.random.default_rng(5).normal(size=shape))
    blob = qt.to_bytes()
    assert blob[:4] == b"NF4Q"
    back = QuantizedTensor.from_bytes(blob)
    assert back == qt
    assert np.array_equal(double_dequant(back), double_dequant(qt))


def test_serialization_rejects_bad_blobs():
    blob = quantize_nf4(np.ones((2, 2))).to_bytes()
    with pytest.raises(ValueError):
        QuantizedTensor.from_bytes(b"XXXX" + blob[4:])
    with pytest.raises(ValueError):
        QuantizedTensor.from_bytes(blob[:-1])
    with pytest.raises(ValueError):
        QuantizedTensor.from_bytes(blob[:5])


# --- LoRA ------------------------------------------------------------------


def instance(rng, n, d, k, r):
    X = rng.normal(size=(n, d))
    qt = quantize_nf4(rng.normal(size=(d, k)))
    return X, qt, LoraAdapter(rng.normal(size=(d, r)), rng.normal(size=(r, k)))


def test_forward_matches_naive_on_4x8x2():
    rng = np.random.default_rng(6)
    X, qt, ad = instance(rng, 4, 8, 2, 3)
    assert np.max(np.abs(qlora_forward(X, qt, ad) - naive_forward(X, double_dequant(qt), ad.L1, ad.L2))) <= 1e-10


def test_zero_adapter_bit_exact():
    rng = np.random.default_rng(7)
    X, qt, ad = instance(rng, 5, 9, 4, 2)
    ad.L1[:] = 0
    assert np.array_equal(qlora_forward(X, qt, ad), X @ double_dequant(qt))


def test_identity_input():
    rng = np.random.default_rng(8)
    _, qt, ad = instance(rng, 1, 6, 3, 2)
    assert np.allclose(qlora_forward(np.eye(6), qt, ad), double_dequant(qt) + ad.L1 @ ad.L2, atol=1e-12)


def test_zero_upstream_gradient():
    rng = np.random.default_rng(9)
    X, qt, ad = instance(rng, 3, 4, 2, 2)
    dL1, dL2 = adapter_gradients(X, qt, ad, np.zeros((3, 2)))
    assert not dL1.any() and not dL2.any()


def test_scalar_chain_rule():
    qt = quantize_nf4(np.array([[0.5]]))
    ad = LoraAdapter(np.array([[2.0]]), np.array([[3.0]]))
    dL1, dL2 = adapter_gradients(np.array([[1.5]]), qt, ad, np.array([[0.25]]))
    assert dL1[0, 0] == 1.5 * 0.25 * 3.0
    assert dL2[0, 0] == 2.0 * 1.5 * 0.25


def fd_check(X, qt, ad, h=1e-5):
    Y = qlora_forward(X, qt, ad)
    analytic = adapter_gradients(X, qt, ad, Y)  # loss = 0.5 * ||Y||^2
    worst = 0.0
    for grad, M in zip(analytic, (ad.L1, ad.L2)):
        for idx in np.ndindex(M.shape):
            orig = M[idx]
            M[idx] = orig + h
            up = 0.5 * np.sum(qlora_forward(X, qt, ad) ** 2)
            M[idx] = orig - h
            down = 0.5 * np.sum(qlora_forward(X, qt, ad) ** 2)
            M[idx] = orig
            num = (up - down) / (2 * h)
            worst = max(worst, abs(num - grad[idx]) / max(abs(num), abs(grad[idx]), 1e-8))
    return worst


def test_finite_differences_3x4x2():
    rng = np.random.default_rng(10)
    X, qt, ad = instance(rng, 3, 4, 2, 2)
    assert fd_check(X, qt, ad) <= 1e-6


def test_input_gradient_finite_differences():
    rng = np.random.default_rng(11)
    X, qt, ad = instance(rng, 2, 3, 2, 2)
    g = input_gradient(X, qt, ad, qlora_forward(X, qt, ad))
    h = 1e-6
    for idx in np.ndindex(X.shape):
        Xp, Xm = X.copy(), X.copy()
        Xp[idx] += h
        Xm[idx] -= h
        num = (0.5 * np.sum(qlora_forward(Xp, qt, ad) ** 2) - 0.5 * np.sum(qlora_forward(Xm, qt, ad) ** 2)) / (2 * h)
        assert num == pytest.approx(g[idx], rel=1e-6, abs=1e-8)


@pytest.mark.parametrize(
    "x_shape, l1_shape, l2_shape",
    [((3, 5), (4, 2), (2, 2)), ((3, 4), (4, 2), (2, 3)), ((3, 4), (3, 2), (2, 2))],
)
def test_dimension_mismatch(x_shape, l1_shape, l2_shape):
    qt = quantize_nf4(np.ones((4, 2)))
    ad = LoraAdapter(np.ones(l1_shape), np.ones(l2_shape))
    with pytest.raises(DimensionMismatch):
        qlora_forward(np.ones(x_shape), qt, ad)


def test_adapter_invariants():
    with pytest.raises(DimensionMismatch):
        LoraAdapter(np.ones((4, 2)), np.ones((3, 2)))
    with pytest.raises(DimensionMismatch):
        LoraAdapter(np.ones((4, 0)), np.ones((0, 2)))
    with pytest.raises(DimensionMismatch):
        adapter_gradients(np.ones((3, 4)), quantize_nf4(np.ones((4, 2))), LoraAdapter(np.ones((4, 1)), np.ones((1, 2))), np.ones((2, 2)))


def test_adapter_init_is_noop():
    ad = LoraAdapter.init(8, 3, 2, np.random.default_rng(0), target_layer="v_proj")
    assert ad.rank == 2 and ad.target_layer == "v_proj" and not ad.L2.any()


def test_selfcheck_all_pass():
    from homeplan.quant.selfcheck import run_selfcheck

    results = run_selfcheck()
    assert len(results) == 10 and all(r.passed for r in results), [r for r in results if not r.passed]


def test_selfcheck_catches_swapped_levels():
    from homeplan.quant.selfcheck import run_selfcheck

    levels = nf4_codebook()
    levels[[3, 4]] = levels[[4, 3]]
    failed = {r.name for r in run_selfcheck(levels) if not r.passed}
    assert "codebook strictly increasing" in failed

"""Token extraction: DCT blocks, quantizers, descriptor, latent grid."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvclab import InvalidArgument, OperatingPoint, ShapeError
from gvclab.tokens import (
    BLOCK,
    bilinear_upsample,
    box_downsample,
    dct2d_forward,
    dct2d_inverse,
    decode_keyframe,
    dequantize,
    dequantize_descriptor,
    encode_gop,
    encode_keyframe,
    extract_descriptor,
    extract_latent_grid,
    padded_dims,
    quantize,
    quantize_descriptor,
    round_half_away,
    validate_tokens,
    zigzag_indices,
)

from conftest import make_gop, moving_stack, small_op


def test_round_half_away():
    vals = np.array([0.5, -0.5, 1.5, -1.5, 2.5, 0.49, -0.49, 2.0])
    out = round_half_away(vals)
    assert out.tolist() == [1, -1, 2, -2, 3, 0, 0, 2]


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(0.25, 64.0))
def test_quantizer_half_step_bound(x, step):
    back = dequantize(quantize(np.array([x]), step), step)[0]
    assert abs(back - x) <= step / 2 + 1e-9


def test_dct_constant_block_is_pure_dc():
    block = np.full((8, 8), 8.0)
    coef = dct2d_forward(block)
    assert coef[0, 0] == pytest.approx(64.0)
    off = coef.copy()
    off[0, 0] = 0.0
    assert np.max(np.abs(off)) < 1e-10


def test_dct_orthonormal_roundtrip_and_energy():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 8, 8)) * 50
    coef = dct2d_forward(x)
    assert np.allclose(dct2d_inverse(coef), x, atol=1e-9)
    assert np.sum(coef**2) == pytest.approx(np.sum(x**2))


def test_padded_dims():
    assert padded_dims(10, 10) == (16, 16)
    assert padded_dims(8, 8) == (8, 8)
    assert padded_dims(1, 17) == (8, 24)


def test_keyframe_roundtrip_error_bounded():
    rng = np.random.default_rng(5)
    frame = rng.integers(0, 256, size=(12, 20), dtype=np.uint8)
    step = 1.0
    codes = encode_keyframe(frame, step)
    back = decode_keyframe(codes, step, 20, 12)
    err = back - frame.astype(np.float64)
    # orthonormal basis: coefficient RMS error step/sqrt(12) carries to pixels
    assert np.sqrt(np.mean(err**2)) <= 0.35 * step
    assert back.shape == (12, 20)


def test_keyframe_constant_is_exact():
    frame = np.full((9, 13), 77, dtype=np.uint8)
    codes = encode_keyframe(frame, 12.0)
    back = decode_keyframe(codes, 12.0, 13, 9)
    assert np.allclose(back, 77.0, atol=1e-9)


def test_descriptor_statistics_oracle():
    stack = np.zeros((4, 16, 16), dtype=np.uint8)
    stack[1] = 255
    stack[3] = 255
    d = extract_descriptor(make_gop(stack), descriptor_len=8)
    assert d[0] == pytest.approx(127.5)       # mean
    assert d[1] == pytest.approx(16256.25)    # variance
    assert d[2] == pytest.approx(255.0)       # mean |temporal diff|
    assert d[3] == pytest.approx(2040.0)      # DC of 16x16 DCT of the 127.5 average
    assert np.allclose(d[4:], 0.0, atol=1e-9)


def test_descriptor_quantization():
    d = np.array([127.5, 16256.25, 255.0, 2040.0, 0.0])
    q = quantize_descriptor(d)
    assert q.tolist() == [255, 32513, 510, 4080, 0]
    assert np.all(np.abs(q) <= 32767)
    back = dequantize_descriptor(q)
    assert np.max(np.abs(back - d)) <= 0.25


def test_descriptor_length_zero():
    stack = np.zeros((2, 8, 8), dtype=np.uint8)
    assert extract_descriptor(make_gop(stack), descriptor_len=0).shape == (0,)


def test_box_downsample_exact_means():
    x = np.arange(16, dtype=np.float64).reshape(4, 4)
    out = box_downsample(x, 2)
    assert out.tolist() == [[2.5, 4.5], [10.5, 12.5]]


def test_box_downsample_partial_cells():
    x = np.arange(25, dtype=np.float64).reshape(5, 5)
    out = box_downsample(x, 2)
    assert out.shape == (3, 3)
    assert out[2, 2] == pytest.approx(24.0)        # single corner element
    assert out[2, 0] == pytest.approx((20 + 21) / 2)
    assert out[0, 2] == pytest.approx((4 + 9) / 2)


def test_bilinear_upsample_values():
    cells = np.array([[0.0, 2.0], [4.0, 6.0]])
    up = bilinear_upsample(cells, 2, 4, 4)
    expected = np.array(
        [
            [0.0, 0.5, 1.5, 2.0],
            [1.0, 1.5, 2.5, 3.0],
            [3.0, 3.5, 4.5, 5.0],
            [4.0, 4.5, 5.5, 6.0],
        ]
    )
    assert np.allclose(up, expected)


def test_bilinear_upsample_constant():
    up = bilinear_upsample(np.full((3, 5), 9.25), 7, 20, 33)
    assert up.shape == (20, 33)
    assert np.allclose(up, 9.25)


def test_downsample_upsample_preserves_constant():
    x = np.full((11, 17), 42.0)
    up = bilinear_upsample(box_downsample(x, 4), 4, 11, 17)
    assert np.allclose(up, 42.0)


def test_zigzag_small_orders():
    assert zigzag_indices(2) == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert zigzag_indices(3) == (
        (0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (1, 2), (2, 1), (2, 2)
    )


def test_zigzag_visits_every_index_once():
    idx = zigzag_indices(16)
    assert len(set(idx)) == 256
    assert all(0 <= r < 16 and 0 <= c < 16 for r, c in idx)


def test_latent_grid_constant_video():
    op = small_op(quant_step=2.0)
    stack = np.full((op.gop_size, 10, 14), 200, dtype=np.uint8)
    grid = extract_latent_grid(make_gop(stack), op)
    assert grid.shape == op.latent_extent(14, 10)
    # centered at 128 then quantized at step 2: (200-128)/2 = 36
    assert np.all(grid == 36)


def test_latent_extent_ceil_division():
    op = OperatingPoint(
        quant_step=12.0,
        spatial_stride=16,
        temporal_stride=4,
        descriptor_len=16,
        refine_iters=4,
        gop_size=29,
    )
    assert op.latent_extent(640, 360) == (8, 23, 40)
    assert op.latent_extent(16, 16) == (8, 1, 1)


def test_operating_point_validation():
    with pytest.raises(InvalidArgument):
        small_op(quant_step=0.0)
    with pytest.raises(InvalidArgument):
        small_op(spatial_stride=0)
    with pytest.raises(InvalidArgument):
        small_op(temporal_stride=0)
    with pytest.raises(InvalidArgument):
        small_op(descriptor_len=-1)
    with pytest.raises(InvalidArgument):
        small_op(refine_iters=-2)
    with pytest.raises(InvalidArgument):
        small_op(gop_size=0)


def test_encode_gop_shapes_and_validation():
    op = small_op()
    stack = moving_stack(op.gop_size, 24, 32)
    tokens = encode_gop(make_gop(stack), op)
    pw, ph = padded_dims(32, 24)
    assert tokens.keyframe_codes.shape == (ph, pw)
    assert ph % BLOCK == 0 and pw % BLOCK == 0
    assert tokens.descriptor.shape == (op.descriptor_len,)
    assert tokens.latent_grid.shape == op.latent_extent(32, 24)
    validate_tokens(tokens, 32, 24)

    short = make_gop(stack[:-1])
    with pytest.raises(ShapeError):
        encode_gop(short, op)


def test_validate_tokens_rejects_wrong_shape():
    op = small_op()
    tokens = encode_gop(make_gop(moving_stack(op.gop_size, 24, 32)), op)
    with pytest.raises(ShapeError):
        validate_tokens(tokens, 40, 24)

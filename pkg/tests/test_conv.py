import numpy as np
import pytest

from src.data_models import TileConfig
from src.exceptions import BadGeometry
from src.formats.conversions import compress_shflbw, decompress, mask_from_dense
from src.formats.matrices import DenseMatrix
from src.spmm import conv2d, conv2d_direct_oracle, conv_output_shape, relative_frobenius_error, spmm_execute
from src.evaluation.synthetic import instance_rng, random_shflbw_matrix


@pytest.mark.parametrize('geometry, expected', [
    ((5, 5, 3, 3, 1, 0), (3, 3)),
    ((5, 5, 3, 3, 1, 1), (5, 5)),
    ((6, 7, 3, 3, 2, 1), (3, 4)),
    ((1, 1, 1, 1, 1, 0), (1, 1)),
])
def test_output_shape(geometry, expected):
    assert conv_output_shape(*geometry) == expected


def test_output_shape_rejects_bad_geometry():
    with pytest.raises(BadGeometry):
        conv_output_shape(2, 2, 3, 3, 1, 0)
    with pytest.raises(BadGeometry):
        conv_output_shape(5, 5, 3, 3, 0, 0)


def test_pointwise_conv_equals_spmm():
    rng = instance_rng(0, 0)
    weights = random_shflbw_matrix(rng, 8, 6, 2, 0.5)
    x = rng.standard_normal((6, 4, 5, 2)).astype(np.float32)
    out = conv2d(weights, x)
    flat = spmm_execute(weights, DenseMatrix(x.reshape(6, -1)))
    assert out.shape == (8, 4, 5, 2)
    np.testing.assert_array_equal(out.reshape(8, -1), flat.values)


def test_single_tap_kernel():
    # 1 output channel, 1 input channel, 3x3 kernel with only the centre tap
    weights = np.zeros((1, 9), dtype=np.float32)
    weights[0, 4] = 2.0
    dense = DenseMatrix(weights)
    A = compress_shflbw(dense, mask_from_dense(dense), V=1)
    x = np.arange(9, dtype=np.float32).reshape(1, 3, 3, 1)
    out = conv2d(A, x, pad=1)
    np.testing.assert_array_equal(out[0, :, :, 0], 2 * x[0, :, :, 0])


@pytest.mark.parametrize('stride, pad', [(1, 0), (1, 1), (2, 0), (2, 1)])
@pytest.mark.parametrize('V', [1, 2, 4])
def test_matches_direct_convolution(stride, pad, V):
    rng = instance_rng(stride * 10 + pad, V)
    C, H, W, N = 3, 7, 6, 2
    weights = random_shflbw_matrix(rng, 8, C * 9, V, 0.4)
    x = rng.standard_normal((C, H, W, N)).astype(np.float32)
    out = conv2d(weights, x, stride=stride, pad=pad, cfg=TileConfig(T_M=4, T_N=8, T_K=4, regfile_size=64))
    expected = conv2d_direct_oracle(decompress(weights), x, stride=stride, pad=pad)
    assert out.shape == expected.shape
    assert relative_frobenius_error(out, expected) < 1e-5


def test_rectangular_kernel_needs_explicit_shape():
    rng = instance_rng(1, 1)
    weights = random_shflbw_matrix(rng, 4, 2 * 3, 2, 1.0)
    x = rng.standard_normal((2, 5, 5, 1)).astype(np.float32)
    with pytest.raises(BadGeometry):
        conv2d(weights, x)
    out = conv2d(weights, x, kernel=(1, 3))
    expected = conv2d_direct_oracle(decompress(weights), x, kernel=(1, 3))
    assert out.shape == (4, 5, 3, 1)
    assert relative_frobenius_error(out, expected) < 1e-5


def test_threads_do_not_change_bits():
    rng = instance_rng(2, 0)
    weights = random_shflbw_matrix(rng, 8, 4 * 9, 4, 0.5)
    x = rng.standard_normal((4, 6, 6, 3)).astype(np.float32)
    cfg = TileConfig(T_M=4, T_N=5, T_K=3, regfile_size=64)
    np.testing.assert_array_equal(conv2d(weights, x, pad=1, cfg=cfg, threads=4), conv2d(weights, x, pad=1, cfg=cfg))


def test_input_validation():
    rng = instance_rng(3, 0)
    weights = random_shflbw_matrix(rng, 2, 9, 2, 1.0)
    with pytest.raises(BadGeometry):
        conv2d(weights, np.zeros((1, 3, 3)))
    with pytest.raises(BadGeometry):
        conv2d(weights, np.zeros((2, 3, 3, 1)))
    with pytest.raises(BadGeometry):
        conv2d(weights, np.zeros((1, 2, 2, 1)))

import math

import numpy as np

from src.data_models import TileConfig
from src.exceptions import BadGeometry
from src.formats.matrices import DenseMatrix, ShflBWMatrix
from src.spmm.executor import execute_tiles


def conv_output_shape(H: int, W: int, R: int, S: int, stride: int, pad: int) -> tuple[int, int]:
    '''
    Output spatial size (P, Q) of a strided, zero-padded convolution.
    Raises BadGeometry when the kernel does not fit.
    '''
    if stride < 1 or pad < 0 or R < 1 or S < 1:
        raise BadGeometry(f'invalid stride={stride}, pad={pad}, kernel={R}x{S}')
    if H + 2 * pad < R or W + 2 * pad < S:
        raise BadGeometry(f'kernel {R}x{S} larger than padded input {H + 2 * pad}x{W + 2 * pad}')
    return (H + 2 * pad - R) // stride + 1, (W + 2 * pad - S) // stride + 1


def _resolve_kernel(n_cols: int, C: int, kernel: tuple[int, int] | None) -> tuple[int, int]:
    if C < 1 or n_cols % C:
        raise BadGeometry(f'weight columns {n_cols} are not a multiple of C={C}')
    taps = n_cols // C
    if kernel is None:
        side = math.isqrt(taps)
        if side * side != taps:
            raise BadGeometry(f'{taps} taps per channel is not square; pass kernel=(R, S)')
        return side, side
    R, S = kernel
    if R * S != taps:
        raise BadGeometry(f'kernel {R}x{S} does not match {taps} taps per channel')
    return R, S


def _check_input(inputs: np.ndarray) -> np.ndarray:
    arr = np.asarray(inputs, dtype=np.float32)
    if arr.ndim != 4:
        raise BadGeometry(f'input must be [C][H][W][N], got {arr.ndim}-D')
    return arr


def conv2d(weights: ShflBWMatrix,
           inputs: np.ndarray,
           stride: int = 1,
           pad: int = 0,
           cfg: TileConfig | None = None,
           kernel: tuple[int, int] | None = None,
           threads: int = 1
           ) -> np.ndarray:
    '''
    Implicit-GEMM convolution with Shfl-BW weights.

    Weights are K_f x (C*R*S); column c decodes to channel c // (R*S), tap
    row (c % (R*S)) // S and tap column c % S. The input is [C][H][W][N]
    with batch innermost. Rows of the unfolded operand are built only for
    the columns of each staged k-chunk; the full unfolded matrix never
    exists. Returns [K_f][P][Q][N].
    '''
    x = _check_input(inputs)
    C, H, W, N = x.shape
    R, S = _resolve_kernel(weights.cols, C, kernel)
    P, Q = conv_output_shape(H, W, R, S, stride, pad)
    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    h_span, w_span = stride * (P - 1) + 1, stride * (Q - 1) + 1

    def unfold_rows(idx: np.ndarray, n0: int, n1: int) -> np.ndarray:
        rows = np.empty((idx.size, n1 - n0), dtype=np.float32)
        for t, c in enumerate(idx):
            channel, tap = divmod(int(c), R * S)
            r, s = divmod(tap, S)
            window = padded[channel, r:r + h_span:stride, s:s + w_span:stride, :]
            rows[t] = window.reshape(-1)[n0:n1]
        return rows

    out = execute_tiles(weights, P * Q * N, unfold_rows, cfg or TileConfig(), threads)
    return out.reshape(weights.rows, P, Q, N)


def conv2d_direct_oracle(weights: DenseMatrix | np.ndarray,
                         inputs: np.ndarray,
                         stride: int = 1,
                         pad: int = 0,
                         kernel: tuple[int, int] | None = None
                         ) -> np.ndarray:
    '''
    Direct convolution in float64 over (K_f, C, R, S) with (P, Q, N)
    vectorized; ground truth for conv2d.
    '''
    w = np.asarray(weights.values if isinstance(weights, DenseMatrix) else weights, dtype=np.float64)
    x = _check_input(inputs).astype(np.float64)
    C, H, W, N = x.shape
    R, S = _resolve_kernel(w.shape[1], C, kernel)
    P, Q = conv_output_shape(H, W, R, S, stride, pad)
    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    w4 = w.reshape(w.shape[0], C, R, S)
    out = np.zeros((w.shape[0], P, Q, N), dtype=np.float64)
    h_span, w_span = stride * (P - 1) + 1, stride * (Q - 1) + 1
    for k in range(w.shape[0]):
        for c in range(C):
            for r in range(R):
                for s in range(S):
                    if w4[k, c, r, s] != 0:
                        out[k] += w4[k, c, r, s] * padded[c, r:r + h_span:stride, s:s + w_span:stride, :]
    return out

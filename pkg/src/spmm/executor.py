from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from loguru import logger

from src.data_models import TileConfig
from src.exceptions import ShapeMismatch
from src.formats.matrices import DenseMatrix, ShflBWMatrix

# (column indices, n_start, n_stop) -> rows of the dense operand, one per index
RowLoader = Callable[[np.ndarray, int, int], np.ndarray]


def _stitch(group_cols: np.ndarray, chunk: range, loader: RowLoader, n_slice: range) -> np.ndarray:
    staging = np.zeros((len(chunk), len(n_slice)), dtype=np.float32)
    positions = np.arange(chunk.start, chunk.stop)
    valid = positions < group_cols.size
    if valid.any():
        staging[valid] = loader(group_cols[positions[valid]], n_slice.start, n_slice.stop)
    return staging


def stitch_tile(group_cols: np.ndarray, chunk: range, B: DenseMatrix, n_slice: range) -> np.ndarray:
    '''
    In-buffer stitching: gathers the rows of B named by the chunk's column
    indices into a contiguous len(chunk) x len(n_slice) staging tile.
    Positions past the end of group_cols are zero rows.
    '''
    group_cols = np.asarray(group_cols, dtype=np.int64)
    return _stitch(group_cols, chunk, lambda idx, n0, n1: B.values[idx, n0:n1], n_slice)


def tile_mma(acc: np.ndarray, a_tile: np.ndarray, b_tile: np.ndarray) -> np.ndarray:
    '''
    acc += a_tile @ b_tile in float32, each inner product accumulated onto
    acc in ascending k order (a running sum, never a pairwise tree), so the
    result only depends on the order of k.
    '''
    if a_tile.shape[1] != b_tile.shape[0] or acc.shape != (a_tile.shape[0], b_tile.shape[1]):
        raise ShapeMismatch(f'tile shapes {acc.shape} += {a_tile.shape} x {b_tile.shape} do not agree')
    products = a_tile.astype(np.float32)[:, :, None] * b_tile.astype(np.float32)[None, :, :]
    stacked = np.concatenate([acc.astype(np.float32)[:, None, :], products], axis=1)
    acc[...] = np.cumsum(stacked, axis=1, dtype=np.float32)[:, -1, :]
    return acc


def execute_tiles(A: ShflBWMatrix,
                  n_cols: int,
                  loader: RowLoader,
                  cfg: TileConfig,
                  threads: int = 1
                  ) -> np.ndarray:
    '''
    Tiled Shfl-BW product against an implicit dense operand.

    Work is split into output tiles of max(1, T_M // V) groups by T_N
    columns. Inside a tile every group loops over T_K-wide chunks of its
    stitched columns, stages the matching operand rows, runs tile_mma and
    finally writes its V rows straight to their original positions.
    Tiles own disjoint output regions, so any thread count gives the same
    bits.
    '''
    core, V = A.core, A.V
    out = np.zeros((A.rows, n_cols), dtype=np.float32)
    groups_per_tile = max(1, cfg.T_M // V)

    def run_tile(g0: int, n0: int) -> None:
        n_slice = range(n0, min(n0 + cfg.T_N, n_cols))
        for g in range(g0, min(g0 + groups_per_tile, A.group_count)):
            cols, values = core.col_indices[g], core.values[g]
            acc = np.zeros((V, len(n_slice)), dtype=np.float32)
            for k0 in range(0, cols.size, cfg.T_K):
                chunk = range(k0, k0 + cfg.T_K)
                a_tile = np.zeros((V, cfg.T_K), dtype=np.float32)
                width = min(cfg.T_K, cols.size - k0)
                a_tile[:, :width] = values[:, k0:k0 + width]
                tile_mma(acc, a_tile, _stitch(cols, chunk, loader, n_slice))
            # reordered write-back
            out[A.group_rows(g), n_slice.start:n_slice.stop] = acc

    tiles = [(g0, n0) for g0 in range(0, A.group_count, groups_per_tile) for n0 in range(0, n_cols, cfg.T_N)]
    logger.debug(f'executing {len(tiles)} output tiles on {threads} thread(s)')
    if threads > 1 and len(tiles) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            list(executor.map(lambda t: run_tile(*t), tiles))
    else:
        for g0, n0 in tiles:
            run_tile(g0, n0)
    return out


def spmm_execute(A: ShflBWMatrix, B: DenseMatrix, cfg: TileConfig | None = None, threads: int = 1) -> DenseMatrix:
    '''
    C = decompress(A) @ B with the kernel's tile semantics: in-buffer
    stitching, tile MMA and reordered write-back. Reduction order is
    ascending global k within each group, so C is bit-identical across tile
    configurations and thread counts and matches spmm_dense_oracle exactly.
    '''
    if A.cols != B.rows:
        raise ShapeMismatch(f'A is {A.shape} but B has {B.rows} rows')
    cfg = cfg or TileConfig()
    values = B.values
    out = execute_tiles(A, B.cols, lambda idx, n0, n1: values[idx, n0:n1], cfg, threads)
    return DenseMatrix(out)


def spmm_dense_oracle(A_dense: DenseMatrix, B: DenseMatrix, row_block: int = 64) -> DenseMatrix:
    '''
    Naive product with k ascending: every C[i][j] is a float32 running sum of
    A[i][k] * B[k][j] for k = 0..K-1.
    '''
    if A_dense.cols != B.rows:
        raise ShapeMismatch(f'A is {A_dense.shape} but B has {B.rows} rows')
    out = np.zeros((A_dense.rows, B.cols), dtype=np.float32)
    if A_dense.cols == 0:
        return DenseMatrix(out)
    for r0 in range(0, A_dense.rows, row_block):
        a = A_dense.values[r0:r0 + row_block]
        products = a[:, :, None] * B.values[None, :, :]
        out[r0:r0 + row_block] = np.cumsum(products, axis=1, dtype=np.float32)[:, -1, :]
    return DenseMatrix(out)


def relative_frobenius_error(actual: np.ndarray | DenseMatrix, expected: np.ndarray | DenseMatrix) -> float:
    """||actual - expected||_F / ||expected||_F, 0 when both are zero."""
    a = np.asarray(actual.values if isinstance(actual, DenseMatrix) else actual, dtype=np.float64)
    e = np.asarray(expected.values if isinstance(expected, DenseMatrix) else expected, dtype=np.float64)
    if a.shape != e.shape:
        raise ShapeMismatch(f'{a.shape} vs {e.shape}')
    diff = np.linalg.norm(a - e)
    norm = np.linalg.norm(e)
    if norm == 0:
        return 0.0 if diff == 0 else float('inf')
    return float(diff / norm)


def max_relative_error(actual: np.ndarray | DenseMatrix, expected: np.ndarray | DenseMatrix) -> float:
    """Largest absolute deviation, relative to the largest expected magnitude."""
    a = np.asarray(actual.values if isinstance(actual, DenseMatrix) else actual, dtype=np.float64)
    e = np.asarray(expected.values if isinstance(expected, DenseMatrix) else expected, dtype=np.float64)
    if a.shape != e.shape:
        raise ShapeMismatch(f'{a.shape} vs {e.shape}')
    if a.size == 0:
        return 0.0
    scale = np.abs(e).max()
    diff = np.abs(a - e).max()
    if scale == 0:
        return 0.0 if diff == 0 else float('inf')
    return float(diff / scale)

from functools import singledispatch

import numpy as np
from loguru import logger

from src.data_models import PatternEnum
from src.exceptions import NonConformantMask, ShapeMismatch
from src.formats.matrices import (
    BlockWiseMatrix,
    DenseMatrix,
    ShflBWMatrix,
    SparsityMask,
    StitchedGroup,
    VectorWiseMatrix,
)
from src.formats.patterns import support_classes, validate_pattern


def _check_shapes(dense: DenseMatrix, mask: SparsityMask) -> None:
    if dense.shape != mask.shape:
        raise ShapeMismatch(f'dense {dense.shape} and mask {mask.shape} differ')


def _require_conformant(mask: SparsityMask, pattern: PatternEnum, V: int) -> None:
    report = validate_pattern(mask, pattern, V)
    if not report.passed:
        raise NonConformantMask(f'mask is not {pattern.value} at V={V}: {report.message}')


def mask_from_dense(dense: DenseMatrix) -> SparsityMask:
    """Non-zero support of a dense matrix."""
    return SparsityMask(dense.values != 0)


def apply_mask(dense: DenseMatrix, mask: SparsityMask) -> DenseMatrix:
    """D ⊙ mask, keeping pruned positions at +0.0."""
    _check_shapes(dense, mask)
    return DenseMatrix(np.where(mask.bits, dense.values, np.float32(0)))


def permute_rows(dense: DenseMatrix, order: np.ndarray) -> DenseMatrix:
    """Row r of the result is row order[r] of the input."""
    order = np.asarray(order, dtype=np.int64)
    if order.size != dense.rows:
        raise ShapeMismatch(f'order has {order.size} entries for {dense.rows} rows')
    return DenseMatrix(dense.values[order])


def shflbw_row_groups(mask: SparsityMask, V: int) -> list[np.ndarray]:
    '''
    Splits rows into groups of V with identical support. Each support class
    is cut into consecutive chunks of V ascending rows; groups are ordered by
    their smallest row.
    '''
    _require_conformant(mask, PatternEnum.shfl_bw, V)
    groups = []
    for rows in support_classes(mask).values():
        for start in range(0, len(rows), V):
            groups.append(np.asarray(rows[start:start + V], dtype=np.int64))
    groups.sort(key=lambda g: int(g[0]) if g.size else -1)
    return groups


def _vector_core(dense: DenseMatrix, mask: SparsityMask, order: np.ndarray, V: int) -> VectorWiseMatrix:
    col_indices, values = [], []
    for g in range(mask.rows // V):
        rows = order[g * V:(g + 1) * V]
        cols = np.flatnonzero(mask.bits[rows[0]]) if rows.size else np.zeros(0, dtype=np.int64)
        col_indices.append(cols)
        values.append(dense.values[np.ix_(rows, cols)])
    return VectorWiseMatrix(rows=mask.rows, cols=mask.cols, V=V,
                            col_indices=tuple(col_indices), values=tuple(values))


def compress_shflbw(dense: DenseMatrix, mask: SparsityMask, V: int) -> ShflBWMatrix:
    '''
    Offline transform of a Shfl-BW matrix into a vector-wise core plus the
    original row-index array.

    Raises:
    -------
    ShapeMismatch
        dense and mask shapes differ.
    NonConformantMask
        some row support occurs a number of times not divisible by V.
    '''
    _check_shapes(dense, mask)
    groups = shflbw_row_groups(mask, V)
    order = np.concatenate(groups) if groups else np.zeros(0, dtype=np.int64)
    core = _vector_core(dense, mask, order, V)
    logger.debug(f'compressed {mask.rows}x{mask.cols} Shfl-BW matrix into {core.group_count} groups, nnz={core.nnz}')
    return ShflBWMatrix(core=core, row_indices=order)


def compress_vectorwise(dense: DenseMatrix, mask: SparsityMask, V: int) -> VectorWiseMatrix:
    _check_shapes(dense, mask)
    _require_conformant(mask, PatternEnum.vector_wise, V)
    return _vector_core(dense, mask, np.arange(mask.rows, dtype=np.int64), V)


def compress_blockwise(dense: DenseMatrix, mask: SparsityMask, V: int) -> BlockWiseMatrix:
    _check_shapes(dense, mask)
    _require_conformant(mask, PatternEnum.block_wise, V)
    grid = mask.bits.reshape(mask.rows // V, V, mask.cols // V, V).all(axis=(1, 3))
    coords = np.argwhere(grid)
    blocks = np.stack(
        [dense.values[br * V:(br + 1) * V, bc * V:(bc + 1) * V] for br, bc in coords]
    ) if coords.size else np.zeros((0, V, V), dtype=np.float32)
    return BlockWiseMatrix(rows=mask.rows, cols=mask.cols, V=V, coords=coords, blocks=blocks)


def shflbw_to_vectorwise(sparse: ShflBWMatrix) -> tuple[VectorWiseMatrix, np.ndarray]:
    """Splits a Shfl-BW matrix into its vector-wise core and row-index array."""
    return sparse.core, sparse.row_indices


@singledispatch
def decompress(sparse) -> DenseMatrix:
    """Reconstructs the dense matrix with zeros at pruned positions."""
    raise TypeError(f'cannot decompress {type(sparse).__name__}')


@decompress.register
def _(sparse: VectorWiseMatrix) -> DenseMatrix:
    out = np.zeros(sparse.shape, dtype=np.float32)
    V = sparse.V
    for g, (cols, block) in enumerate(zip(sparse.col_indices, sparse.values)):
        out[g * V:(g + 1) * V, cols] = block
    return DenseMatrix(out)


@decompress.register
def _(sparse: ShflBWMatrix) -> DenseMatrix:
    compressed = decompress(sparse.core).values
    out = np.zeros(sparse.shape, dtype=np.float32)
    out[sparse.row_indices] = compressed
    return DenseMatrix(out)


@decompress.register
def _(sparse: BlockWiseMatrix) -> DenseMatrix:
    out = np.zeros(sparse.shape, dtype=np.float32)
    V = sparse.V
    for (br, bc), block in zip(sparse.coords, sparse.blocks):
        out[br * V:(br + 1) * V, bc * V:(bc + 1) * V] = block
    return DenseMatrix(out)


@decompress.register
def _(sparse: DenseMatrix) -> DenseMatrix:
    return sparse


def stitch_to_blockwise(vw: VectorWiseMatrix | ShflBWMatrix, tile_width: int | None = None) -> list[StitchedGroup]:
    '''
    Column stitching within each group: the group's columns, in sorted order,
    are packed into dense V x tile_width tiles. A ragged tail is zero padded
    and its column map entries set to -1.
    '''
    core = vw.core if isinstance(vw, ShflBWMatrix) else vw
    width = tile_width or core.V
    stitched = []
    for cols, block in zip(core.col_indices, core.values):
        n_tiles = -(-cols.size // width)
        padded = n_tiles * width
        pad = padded - cols.size
        column_map = np.full(padded, -1, dtype=np.int64)
        column_map[:cols.size] = cols
        values = np.zeros((core.V, padded), dtype=np.float32)
        values[:, :cols.size] = block
        tiles = values.reshape(core.V, n_tiles, width).transpose(1, 0, 2)
        stitched.append(StitchedGroup(tiles=np.ascontiguousarray(tiles),
                                      column_maps=column_map.reshape(n_tiles, width),
                                      padding=pad))
    padded_groups = sum(1 for s in stitched if s.padding)
    if padded_groups:
        logger.debug(f'{padded_groups} of {len(stitched)} groups zero-padded to tile width {width}')
    return stitched

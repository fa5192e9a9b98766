import numpy as np
from loguru import logger

from src.exceptions import BadParams
from src.formats.matrices import SparsityMask
from src.pruning.scores import ImportanceMatrix, check_ratio, round_count


def _top_k_along_last(values: np.ndarray, k: int) -> np.ndarray:
    '''
    Boolean array marking the k largest entries along the last axis.
    Stable sorting keeps the smaller index first among equal values.
    '''
    keep = np.zeros(values.shape, dtype=np.bool_)
    if k <= 0:
        return keep
    order = np.argsort(-values, axis=-1, kind='stable')[..., :k]
    np.put_along_axis(keep, order, True, axis=-1)
    return keep


def _require_divides(V: int, extent: int, what: str) -> None:
    if V < 1 or extent % V:
        raise BadParams(f'V={V} does not divide {what}={extent}')


def prune_unstructured(scores: ImportanceMatrix, keep_ratio: float) -> SparsityMask:
    '''
    Keeps exactly round(keep_ratio * M * K) entries with the highest scores,
    smaller row-major index first among ties.
    '''
    keep_ratio = check_ratio(keep_ratio, 'keep_ratio')
    k = round_count(keep_ratio * scores.rows * scores.cols)
    flat = _top_k_along_last(scores.scores.ravel(), k)
    return SparsityMask(flat.reshape(scores.shape))


def prune_vectorwise(scores: ImportanceMatrix, V: int, alpha: float) -> SparsityMask:
    '''
    Vector-wise pruning over groups of V consecutive rows: every group keeps
    its round(alpha * K) columns with the largest column-score sums, as full
    V x 1 vectors.
    '''
    _require_divides(V, scores.rows, 'rows')
    alpha = check_ratio(alpha)
    k = round_count(alpha * scores.cols)
    groups = scores.rows // V
    column_sums = scores.scores.reshape(groups, V, scores.cols).sum(axis=1)
    keep = _top_k_along_last(column_sums, k)
    return SparsityMask(np.repeat(keep, V, axis=0))


def prune_blockwise(scores: ImportanceMatrix, V: int, alpha: float) -> SparsityMask:
    '''
    Block-wise pruning: keeps the round(alpha * (M/V) * (K/V)) V x V blocks
    with the largest score sums globally, ties by (block_row, block_col).
    '''
    _require_divides(V, scores.rows, 'rows')
    _require_divides(V, scores.cols, 'cols')
    alpha = check_ratio(alpha)
    grid = (scores.rows // V, scores.cols // V)
    block_sums = scores.scores.reshape(grid[0], V, grid[1], V).sum(axis=(1, 3))
    k = round_count(alpha * grid[0] * grid[1])
    keep = _top_k_along_last(block_sums.ravel(), k).reshape(grid)
    return SparsityMask(np.kron(keep, np.ones((V, V), dtype=np.bool_)).astype(np.bool_))


def prune_balanced(scores: ImportanceMatrix, n: int, m: int) -> SparsityMask:
    '''
    n:m balanced pruning: in each row, every consecutive window of m columns
    keeps its n highest scores (smaller column first among ties).
    '''
    if m < 1 or scores.cols % m:
        raise BadParams(f'm={m} does not divide cols={scores.cols}')
    if not 0 <= n <= m:
        raise BadParams(f'n:m balanced sparsity needs 0 <= n <= m, got {n}:{m}')
    windows = scores.scores.reshape(scores.rows, scores.cols // m, m)
    keep = _top_k_along_last(windows, n)
    logger.debug(f'balanced {n}:{m} pruning kept {int(keep.sum())} of {keep.size} entries')
    return SparsityMask(keep.reshape(scores.shape))

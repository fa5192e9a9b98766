from dataclasses import dataclass

import numpy as np

from src.exceptions import BadParams, ShapeMismatch
from src.formats.matrices import DenseMatrix, SparsityMask


@dataclass(frozen=True, eq=False)
class ImportanceMatrix:
    """Non-negative, finite importance score per weight."""

    scores: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.scores, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ShapeMismatch(f'ImportanceMatrix needs a 2-D array, got {arr.ndim}-D')
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise BadParams('importance scores must be finite and non-negative')
        arr.setflags(write=False)
        object.__setattr__(self, 'scores', arr)

    @property
    def rows(self) -> int:
        return self.scores.shape[0]

    @property
    def cols(self) -> int:
        return self.scores.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def permuted(self, order: np.ndarray) -> 'ImportanceMatrix':
        """Row r of the result is row order[r] of this matrix."""
        return ImportanceMatrix(self.scores[np.asarray(order, dtype=np.int64)])


def importance_scores(weights: DenseMatrix) -> ImportanceMatrix:
    '''
    Magnitude importance: scores[i][j] = |weights[i][j]|.
    '''
    return ImportanceMatrix(np.abs(weights.values.astype(np.float64)))


def kept_score(scores: ImportanceMatrix, mask: SparsityMask) -> float:
    """Sum of the scores a mask keeps."""
    if scores.shape != mask.shape:
        raise ShapeMismatch(f'scores {scores.shape} and mask {mask.shape} differ')
    return float(scores.scores[mask.bits].sum())


def round_count(x: float) -> int:
    '''
    Round-half-up of a non-negative budget. A small epsilon absorbs float
    noise such as 0.1 * 30 = 3.0000000000000004.
    '''
    return int(np.floor(x + 0.5 + 1e-9))


def check_ratio(ratio: float, name: str = 'alpha') -> float:
    if not 0 <= ratio <= 1:
        raise BadParams(f'{name} must lie in [0, 1], got {ratio}')
    return float(ratio)

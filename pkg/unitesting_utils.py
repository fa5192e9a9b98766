import numpy as np

from src.evaluation.synthetic import random_shflbw_mask
from src.formats.conversions import apply_mask, compress_shflbw
from src.formats.matrices import DenseMatrix, ShflBWMatrix, SparsityMask
from src.pruning.scores import ImportanceMatrix

DEMO_WEIGHTS = [
    [0.9, 0.1, 0.8, 0.0],
    [0.1, 0.9, 0.0, 0.8],
    [0.8, 0.0, 0.9, 0.1],
    [0.0, 0.8, 0.1, 0.9],
]


def demo_scores() -> ImportanceMatrix:
    """4x4 scores whose best 2-row groups are {0, 2} and {1, 3}."""
    return ImportanceMatrix(np.array(DEMO_WEIGHTS))


def random_scores(seed: int, rows: int, cols: int) -> ImportanceMatrix:
    return ImportanceMatrix(np.random.default_rng(seed).random((rows, cols)))


def random_mask(seed: int, rows: int, cols: int, density: float = 0.5) -> SparsityMask:
    """Unstructured fuzz mask; almost never conformant to any structured pattern."""
    return SparsityMask(np.random.default_rng(seed).random((rows, cols)) < density)


def shuffled_vector_mask(seed: int, rows: int, cols: int, V: int, kept_cols: int) -> SparsityMask:
    """Seeded Shfl-BW mask where every group of V scattered rows keeps kept_cols columns."""
    return random_shflbw_mask(np.random.default_rng(seed), rows, cols, V, kept_cols / cols)


def shflbw_operand(seed: int, rows: int, cols: int, V: int, kept_cols: int) -> tuple[ShflBWMatrix, DenseMatrix]:
    """Compressed Shfl-BW matrix and its dense (masked) counterpart."""
    mask = shuffled_vector_mask(seed, rows, cols, V, kept_cols)
    values = np.random.default_rng(seed + 1).standard_normal((rows, cols)).astype(np.float32)
    dense = apply_mask(DenseMatrix(values), mask)
    return compress_shflbw(dense, mask, V), dense


def dense_operand(seed: int, rows: int, cols: int) -> DenseMatrix:
    return DenseMatrix(np.random.default_rng(seed).standard_normal((rows, cols)).astype(np.float32))


def sequential_float32_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    '''
    Scalar triple loop with a float32 running sum over ascending k; slow,
    tiny inputs only.
    '''
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float32)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = np.float32(0.0)
            for k in range(a.shape[1]):
                acc = np.float32(acc + np.float32(a[i, k]) * np.float32(b[k, j]))
            out[i, j] = acc
    return out

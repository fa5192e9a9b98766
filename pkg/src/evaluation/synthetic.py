import numpy as np

from src.formats.conversions import apply_mask, compress_shflbw
from src.formats.matrices import DenseMatrix, ShflBWMatrix, SparsityMask
from src.pruning.scores import round_count


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for instance `index` of a seeded sweep."""
    return np.random.default_rng([seed, index])


def random_dense(rng: np.random.Generator, rows: int, cols: int, scale: float = 1.0) -> DenseMatrix:
    return DenseMatrix(rng.standard_normal((rows, cols)).astype(np.float32) * np.float32(scale))


def random_shflbw_mask(rng: np.random.Generator, M: int, K: int, V: int, alpha: float) -> SparsityMask:
    '''
    Conformant Shfl-BW mask: a vector-wise mask with round(alpha * K) random
    columns per group of V rows, scattered through a random row permutation.
    '''
    k = round_count(alpha * K)
    grouped = np.zeros((M // V, K), dtype=np.bool_)
    for g in range(M // V):
        grouped[g, rng.choice(K, size=k, replace=False)] = True
    bits = np.repeat(grouped, V, axis=0)
    out = np.empty_like(bits)
    out[rng.permutation(M)] = bits
    return SparsityMask(out)


def random_shflbw_matrix(rng: np.random.Generator, M: int, K: int, V: int, alpha: float) -> ShflBWMatrix:
    mask = random_shflbw_mask(rng, M, K, V, alpha)
    return compress_shflbw(apply_mask(random_dense(rng, M, K), mask), mask, V)

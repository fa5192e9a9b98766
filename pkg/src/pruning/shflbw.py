from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np
from loguru import logger

from src.data_models import PatternEnum, PruneConfig
from src.exceptions import BadParams
from src.formats.matrices import SparsityMask
from src.pruning.baselines import prune_balanced, prune_blockwise, prune_unstructured, prune_vectorwise
from src.pruning.grouping import kmeans_row_grouping
from src.pruning.scores import ImportanceMatrix, kept_score, round_count


@dataclass(frozen=True, eq=False)
class PruneResult:
    """A pruning mask in original row order plus the row grouping behind it."""

    mask: SparsityMask
    permutation: np.ndarray
    kept_score: float
    pattern: PatternEnum
    alpha: float
    beta: float | None = None
    V: int | None = None
    seed: int | None = None

    @property
    def density(self) -> float:
        return self.mask.density

    def to_sidecar(self) -> dict:
        """JSON-ready description of this result, written next to the mask container."""
        return {
            'pattern': self.pattern.value,
            'alpha': self.alpha,
            'beta': self.beta,
            'V': self.V,
            'seed': self.seed,
            'kept_score': self.kept_score,
            'density': self.density,
            'permutation': [int(i) for i in self.permutation],
        }


def _inverse_permute_rows(bits: np.ndarray, permutation: np.ndarray) -> np.ndarray:
    """Undo a row gather: row r of bits goes back to original row permutation[r]."""
    out = np.empty_like(bits)
    out[permutation] = bits
    return out


def prune_shflbw(scores: ImportanceMatrix, cfg: PruneConfig) -> PruneResult:
    '''
    Two-step Shfl-BW pattern search:

        1. unstructured pruning at beta = min(1, beta_factor * alpha)
        2. balanced K-Means on the rows of that binary mask -> row order
        3. gather score rows in that order
        4. vector-wise pruning at alpha on the gathered scores
        5. scatter the mask rows back to the original order

    The identity grouping (plain vector-wise pruning) is evaluated as well and
    wins unless the shuffled grouping keeps a strictly higher score.
    '''
    V = cfg.V
    if scores.rows % V:
        raise BadParams(f'V={V} does not divide rows={scores.rows}')
    beta_mask = prune_unstructured(scores, cfg.beta)
    permutation = kmeans_row_grouping(beta_mask, V, cfg, scores=scores)
    shuffled_bits = prune_vectorwise(scores.permuted(permutation), V, cfg.alpha).bits
    shuffled = SparsityMask(_inverse_permute_rows(shuffled_bits, permutation))
    shuffled_score = kept_score(scores, shuffled)

    identity = prune_vectorwise(scores, V, cfg.alpha)
    identity_score = kept_score(scores, identity)

    if shuffled_score > identity_score:
        mask, order, score = shuffled, permutation, shuffled_score
    else:
        log = logger.debug if shuffled_score == identity_score else logger.warning
        log(
            f'shuffled grouping kept {shuffled_score:.6g} <= identity {identity_score:.6g}; '
            'falling back to plain vector-wise pruning'
        )
        mask, order, score = identity, np.arange(scores.rows, dtype=np.int64), identity_score
    logger.info(
        f'Shfl-BW pruning alpha={cfg.alpha} beta={cfg.beta} V={V}: kept score {score:.6g}, '
        f'density {mask.density:.4f}'
    )
    return PruneResult(mask=mask, permutation=order, kept_score=score, pattern=PatternEnum.shfl_bw,
                       alpha=cfg.alpha, beta=cfg.beta, V=V, seed=cfg.seed)


def prune(scores: ImportanceMatrix,
          pattern: PatternEnum | str,
          cfg: PruneConfig,
          nm: tuple[int, int] | None = None
          ) -> PruneResult:
    '''
    Runs the pruner for one pattern and wraps the mask in a PruneResult with
    an identity permutation for every pattern but shflbw.
    '''
    pattern = PatternEnum(pattern)
    if pattern is PatternEnum.shfl_bw:
        return prune_shflbw(scores, cfg)
    if pattern is PatternEnum.unstructured:
        mask = prune_unstructured(scores, cfg.alpha)
    elif pattern is PatternEnum.vector_wise:
        mask = prune_vectorwise(scores, cfg.V, cfg.alpha)
    elif pattern is PatternEnum.block_wise:
        mask = prune_blockwise(scores, cfg.V, cfg.alpha)
    elif pattern is PatternEnum.balanced:
        if nm is None:
            raise BadParams('balanced pruning needs nm=(n, m)')
        mask = prune_balanced(scores, *nm)
    else:
        raise BadParams(f'no pruner for pattern {pattern.value}')
    return PruneResult(mask=mask, permutation=np.arange(scores.rows, dtype=np.int64),
                       kept_score=kept_score(scores, mask), pattern=pattern, alpha=cfg.alpha,
                       V=cfg.V if pattern in (PatternEnum.vector_wise, PatternEnum.block_wise) else None,
                       seed=cfg.seed)


def _partitions(items: tuple[int, ...], size: int) -> Iterator[list[tuple[int, ...]]]:
    """All partitions of items into unordered groups of `size`."""
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for mates in combinations(rest, size - 1):
        remaining = tuple(i for i in rest if i not in mates)
        for tail in _partitions(remaining, size):
            yield [(head, *mates), *tail]


def optimal_shflbw_bruteforce(scores: ImportanceMatrix, V: int, alpha: float) -> tuple[float, list[tuple[int, ...]]]:
    '''
    Exact optimum of Shfl-BW pruning with a per-group budget of
    round(alpha * K) columns, by enumerating every partition of the rows into
    groups of V. For a fixed partition the per-group top-k column sums are
    optimal, so only partitions need enumerating. Tiny instances only.
    '''
    if V < 1 or scores.rows % V:
        raise BadParams(f'V={V} does not divide rows={scores.rows}')
    k = round_count(alpha * scores.cols)
    best_score, best_groups = -1.0, []
    for groups in _partitions(tuple(range(scores.rows)), V):
        total = 0.0
        for group in groups:
            sums = scores.scores[list(group)].sum(axis=0)
            total += float(np.sort(sums)[::-1][:k].sum())
        if total > best_score:
            best_score, best_groups = total, groups
    return best_score, best_groups

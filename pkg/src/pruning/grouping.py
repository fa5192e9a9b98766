from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist

from src.data_models import PruneConfig
from src.exceptions import BadParams
from src.formats.matrices import SparsityMask
from src.pruning.baselines import prune_vectorwise
from src.pruning.scores import ImportanceMatrix, kept_score


@dataclass(frozen=True)
class _RestartOutcome:
    restart: int
    score: float
    permutation: np.ndarray
    iterations: int


def _squared_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance of every row to every centroid (rows x centroids)."""
    return cdist(X, centroids, 'sqeuclidean')


def _farthest_point_seeds(X: np.ndarray, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    '''
    Farthest-point seeding: a random first row, then repeatedly the row
    farthest from every chosen seed (smallest index among ties).
    '''
    first = int(rng.integers(X.shape[0]))
    chosen = [first]
    min_d = _squared_distances(X, X[[first]])[:, 0]
    min_d[first] = -1.0
    for _ in range(1, n_clusters):
        nxt = int(np.argmax(min_d))
        chosen.append(nxt)
        min_d = np.minimum(min_d, _squared_distances(X, X[[nxt]])[:, 0])
        min_d[chosen] = -1.0
    return X[chosen].copy()


def _capacity_assign(distances: np.ndarray, capacity: int, tie_order: np.ndarray) -> np.ndarray:
    '''
    Balanced assignment: rows with the largest (second best - best) margin
    pick first, each taking its nearest centroid that still has room.
    Rows with equal margins go in tie_order.
    '''
    n_rows, n_clusters = distances.shape
    if n_clusters == 1:
        return np.zeros(n_rows, dtype=np.int64)
    preference = np.argsort(distances, axis=1, kind='stable')
    ranked = np.take_along_axis(distances, preference[:, :2], axis=1)
    margin = ranked[:, 1] - ranked[:, 0]
    sizes = np.zeros(n_clusters, dtype=np.int64)
    assignment = np.full(n_rows, -1, dtype=np.int64)
    for r in np.lexsort((tie_order, -margin)):
        for c in preference[r]:
            if sizes[c] < capacity:
                assignment[r] = c
                sizes[c] += 1
                break
    return assignment


def _assignment_to_permutation(assignment: np.ndarray, n_clusters: int) -> np.ndarray:
    """Consecutive chunks of V rows are the groups, ordered by their smallest row."""
    groups = [np.flatnonzero(assignment == c) for c in range(n_clusters)]
    groups.sort(key=lambda g: int(g[0]))
    return np.concatenate(groups)


def _run_restart(X: np.ndarray,
                 scores: ImportanceMatrix,
                 V: int,
                 cfg: PruneConfig,
                 restart: int
                 ) -> _RestartOutcome:
    n_clusters = X.shape[0] // V
    rng = np.random.default_rng([cfg.seed, restart])
    centroids = _farthest_point_seeds(X, n_clusters, rng)
    # equal-margin rows (e.g. an all-ones beta mask) get a per-restart order
    tie_order = rng.permutation(X.shape[0])
    assignment = np.full(X.shape[0], -1, dtype=np.int64)
    iterations = 0
    for iterations in range(1, cfg.kmeans_max_iters + 1):
        new_assignment = _capacity_assign(_squared_distances(X, centroids), V, tie_order)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(n_clusters):
            centroids[c] = X[assignment == c].mean(axis=0)
    permutation = _assignment_to_permutation(assignment, n_clusters)
    vw_mask = prune_vectorwise(scores.permuted(permutation), V, cfg.alpha)
    score = kept_score(scores.permuted(permutation), vw_mask)
    logger.debug(f'restart {restart}: {iterations} iterations, kept score {score:.6g}')
    return _RestartOutcome(restart=restart, score=score, permutation=permutation, iterations=iterations)


def kmeans_row_grouping(mask: SparsityMask,
                        V: int,
                        cfg: PruneConfig,
                        scores: ImportanceMatrix | None = None
                        ) -> np.ndarray:
    '''
    Clusters the rows of a binary mask into M/V groups of exactly V rows with
    a capacity-constrained K-Means and returns the row order whose
    consecutive V-chunks are the groups.

    Each of cfg.restarts runs is seeded from (cfg.seed, restart index). The
    winner is the run whose grouping gives the highest kept score after
    vector-wise pruning at cfg.alpha (ties to the lower restart index), so
    the result does not depend on cfg.threads.

    Args:
    -----
    mask : SparsityMask
        Binary mask whose rows are the clustering features.
    V : int
        Group size, must divide the row count.
    cfg : PruneConfig
        Seed, restart count, iteration cap, alpha and thread count.
    scores : ImportanceMatrix | None
        Scores used to rank restarts; the mask itself when omitted.
    '''
    if V < 1 or mask.rows % V:
        raise BadParams(f'V={V} does not divide rows={mask.rows}')
    if scores is None:
        scores = ImportanceMatrix(mask.bits.astype(np.float64))
    elif scores.shape != mask.shape:
        raise BadParams(f'scores {scores.shape} and mask {mask.shape} differ')
    if mask.rows == 0 or V == mask.rows or V == 1:
        return np.arange(mask.rows, dtype=np.int64)

    X = mask.bits.astype(np.float64)
    restarts = range(cfg.restarts)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            outcomes = list(executor.map(lambda r: _run_restart(X, scores, V, cfg, r), restarts))
    else:
        outcomes = [_run_restart(X, scores, V, cfg, r) for r in restarts]
    best = min(outcomes, key=lambda o: (-o.score, o.restart))
    logger.info(
        f'K-Means grouping: {mask.rows // V} groups of {V}, best restart {best.restart} '
        f'of {cfg.restarts} (kept score {best.score:.6g}, {best.iterations} iterations)'
    )
    return best.permutation

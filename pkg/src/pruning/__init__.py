from src.pruning.baselines import prune_balanced, prune_blockwise, prune_unstructured, prune_vectorwise
from src.pruning.grouping import kmeans_row_grouping
from src.pruning.scores import ImportanceMatrix, importance_scores, kept_score
from src.pruning.shflbw import PruneResult, optimal_shflbw_bruteforce, prune, prune_shflbw

__all__ = [
    'ImportanceMatrix',
    'PruneResult',
    'importance_scores',
    'kept_score',
    'kmeans_row_grouping',
    'optimal_shflbw_bruteforce',
    'prune',
    'prune_balanced',
    'prune_blockwise',
    'prune_shflbw',
    'prune_unstructured',
    'prune_vectorwise',
]

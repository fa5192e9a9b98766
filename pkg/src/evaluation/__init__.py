from src.evaluation.executor_evaluation import ExecutorEvaluationService
from src.evaluation.pruning_evaluation import PruningEvaluationService, record_results
from src.evaluation.synthetic import instance_rng, random_dense, random_shflbw_mask, random_shflbw_matrix

__all__ = [
    'ExecutorEvaluationService',
    'PruningEvaluationService',
    'instance_rng',
    'random_dense',
    'random_shflbw_mask',
    'random_shflbw_matrix',
    'record_results',
]

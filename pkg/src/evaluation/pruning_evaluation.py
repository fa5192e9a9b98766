import os
import time
from datetime import datetime

from loguru import logger
from tqdm import tqdm

from src.data_models import ExecutorEvaluation, PatternEnum, PruneConfig, PruningEvaluation
from src.exceptions import BadParams
from src.formats.fileio import FileIO
from src.pruning.scores import ImportanceMatrix
from src.pruning.shflbw import optimal_shflbw_bruteforce, prune
from src.evaluation.synthetic import instance_rng


class PruningEvaluationService:
    '''
    Calibration of the Shfl-BW pattern search against the vector-wise and
    block-wise baselines on seeded random score matrices.

    Args:
    -----
    restarts: int
        K-Means restarts per Shfl-BW search
    beta_factor: float
        Unstructured pre-pruning ratio factor, beta = min(1, beta_factor * alpha)
    threads: int
        Worker threads used by the K-Means restarts
    '''

    def __init__(self, restarts: int = 4, beta_factor: float = 2.0, threads: int = 1):
        self.restarts = restarts
        self.beta_factor = beta_factor
        self.threads = threads

    def execute_evaluation(
        self,
        alpha: float,
        V: int,
        instances: int = 1000,
        rows: int = 32,
        cols: int = 32,
        seed: int = 0,
        optimum_instances: int = 0,
        optimum_shape: tuple[int, int] = (6, 6),
        optimum_V: int = 2,
        dir_outpath: str | None = None,
        show_progress: bool = True,
    ) -> PruningEvaluation:
        """Runs the sweep and returns the dominance counts.

        Args:
            alpha: float
                Kept fraction for every pruner
            V: int
                Vector / block size, must divide rows and cols
            instances: int=1000
                Number of random score matrices
            rows, cols: int=32
                Shape of each score matrix
            seed: int=0
                Instance i draws from numpy's default_rng([seed, i])
            optimum_instances: int=0
                Extra tiny instances compared against the exhaustive optimum;
                0 skips the comparison
            optimum_shape: tuple[int, int]=(6, 6)
                Shape of those tiny instances
            optimum_V: int=2
                Group size used for them
            dir_outpath: str | None=None
                When set, results are also written there as timestamped JSON
        """
        if rows % V or cols % V:
            raise BadParams(f'V={V} must divide both {rows} and {cols}')
        cfg = PruneConfig.build(alpha=alpha, V=V, seed=seed, restarts=self.restarts,
                                beta_factor=self.beta_factor, threads=self.threads)
        results = PruningEvaluation(instances=instances, rows=rows, cols=cols, alpha=alpha, V=V, seed=seed)

        start = time.perf_counter()
        for i in tqdm(range(instances), 'Score matrices', disable=not show_progress):
            scores = ImportanceMatrix(instance_rng(seed, i).random((rows, cols)))
            shfl = prune(scores, PatternEnum.shfl_bw, cfg).kept_score
            vw = prune(scores, PatternEnum.vector_wise, cfg).kept_score
            bw = prune(scores, PatternEnum.block_wise, cfg).kept_score
            results.shflbw_ge_vw += shfl >= vw
            results.shflbw_gt_vw += shfl > vw
            results.vw_ge_bw += vw >= bw

        if optimum_instances:
            if optimum_shape[0] % optimum_V:
                raise BadParams(f'optimum_V={optimum_V} must divide {optimum_shape[0]}')
            opt_cfg = cfg.model_copy(update={'V': optimum_V})
            results.optimum_instances = optimum_instances
            results.optimum_shape, results.optimum_V = list(optimum_shape), optimum_V
            results.within_90pct_of_optimum = 0
            for i in tqdm(range(optimum_instances), 'Exhaustive optimum', disable=not show_progress):
                scores = ImportanceMatrix(instance_rng(seed, instances + i).random(optimum_shape))
                shfl = prune(scores, PatternEnum.shfl_bw, opt_cfg).kept_score
                best, _ = optimal_shflbw_bruteforce(scores, optimum_V, alpha)
                results.within_90pct_of_optimum += shfl >= 0.9 * best

        end = time.perf_counter() - start
        results.evaluation_time = f'{round(end/60, 2)} minutes'
        logger.info(
            f'Pruning evaluation alpha={alpha} V={V}: shflbw>=vw {results.shflbw_ge_vw}/{instances}, '
            f'vw>=bw {results.vw_ge_bw}/{instances}, strict gain {results.strict_improvement_rate:.2%}'
        )
        if dir_outpath:
            record_results(results, dir_outpath=dir_outpath)
        return results


def record_results(results: PruningEvaluation | ExecutorEvaluation | dict, dir_outpath: str = './eval_results') -> str:
    """Writes results to a timestamped JSON file in dir_outpath and returns its path.

    Args:
    -----
    results: PruningEvaluation | ExecutorEvaluation | dict
        Evaluation outcome
    dir_outpath: str
        Output directory, created when missing; the file name is derived
        from the kind of evaluation.
    """
    time_marker = datetime.now().strftime('%Y-%m-%d-%H-%M-%S')
    if isinstance(results, PruningEvaluation):
        name = f'pruning_eval_a{results.alpha}_v{results.V}_{time_marker}.json'
    elif isinstance(results, ExecutorEvaluation):
        name = f'{results.kernel}_eval_{time_marker}.json'
    else:
        name = f'eval_{time_marker}.json'
    data = results if isinstance(results, dict) else results.model_dump(mode='json')
    return FileIO.save_as_json(os.path.join(dir_outpath, name), data, overwrite=True)

import time

import numpy as np
from loguru import logger
from tqdm import tqdm

from src.data_models import ExecutorEvaluation, TileConfig
from src.formats.conversions import decompress
from src.formats.matrices import DenseMatrix
from src.spmm.conv import conv2d, conv2d_direct_oracle
from src.spmm.executor import relative_frobenius_error, spmm_dense_oracle, spmm_execute
from src.evaluation.pruning_evaluation import record_results
from src.evaluation.synthetic import instance_rng, random_dense, random_shflbw_matrix

ALPHAS = tuple(round(0.1 * i, 1) for i in range(1, 11))


class ExecutorEvaluationService:
    """Randomized oracle sweeps of the tiled SpMM executor and the implicit-GEMM convolution."""

    def __init__(self, cfg: TileConfig | None = None, threads: int = 1, tolerance: float = 1e-5):
        self.cfg = cfg or TileConfig()
        self.threads = threads
        self.tolerance = tolerance

    def evaluate_spmm(
        self,
        instances: int = 1000,
        seed: int = 0,
        max_dim: int = 256,
        max_n: int = 64,
        vector_sizes: tuple[int, ...] = (2, 4, 8, 16),
        dir_outpath: str | None = None,
        show_progress: bool = True,
    ) -> ExecutorEvaluation:
        '''
        Random conformant Shfl-BW operands (M, K <= max_dim, N <= max_n) are
        multiplied by the executor and compared against spmm_dense_oracle on
        the decompressed operand. exact_matches counts bit-identical results;
        max_error_vs_float64 tracks the distance to a float64 product.
        '''
        results = ExecutorEvaluation(kernel='spmm', instances=instances, seed=seed, tolerance=self.tolerance)
        worst_f64 = 0.0
        start = time.perf_counter()
        for i in tqdm(range(instances), 'SpMM instances', disable=not show_progress):
            rng = instance_rng(seed, i)
            V = int(rng.choice(vector_sizes))
            M = V * int(rng.integers(1, max_dim // V + 1))
            K = int(rng.integers(1, max_dim + 1))
            N = int(rng.integers(1, max_n + 1))
            alpha = float(rng.choice(ALPHAS))
            A = random_shflbw_matrix(rng, M, K, V, alpha)
            B = random_dense(rng, K, N)

            C = spmm_execute(A, B, self.cfg, threads=self.threads)
            A_dense = decompress(A)
            expected = spmm_dense_oracle(A_dense, B)
            err = relative_frobenius_error(C, expected)
            results.max_relative_error = max(results.max_relative_error, err)
            results.exact_matches += C.equals(expected)
            results.failures += err > self.tolerance
            f64 = A_dense.values.astype(np.float64) @ B.values.astype(np.float64)
            worst_f64 = max(worst_f64, relative_frobenius_error(C, f64))

        results.max_error_vs_float64 = worst_f64
        return self._finish(results, start, dir_outpath)

    def evaluate_conv(
        self,
        instances: int = 200,
        seed: int = 0,
        max_channels: int = 8,
        max_spatial: int = 12,
        max_batch: int = 4,
        dir_outpath: str | None = None,
        show_progress: bool = True,
    ) -> ExecutorEvaluation:
        '''
        Random convolutions (C, K_f <= max_channels, H, W <= max_spatial,
        R, S in {1, 3}, N <= max_batch, stride 1-2, pad 0-1) against the
        direct float64 convolution. For 1x1 / stride 1 / pad 0 instances the
        result must also be bit-identical to the plain SpMM path; those are
        counted in pointwise_instances and exact_matches.
        '''
        results = ExecutorEvaluation(kernel='conv', instances=instances, seed=seed, tolerance=self.tolerance)
        pointwise = 0
        start = time.perf_counter()
        for i in tqdm(range(instances), 'Conv instances', disable=not show_progress):
            rng = instance_rng(seed, i)
            V = int(rng.choice([v for v in (1, 2, 4, 8) if v <= max_channels]))
            K_f = V * int(rng.integers(1, max_channels // V + 1))
            C = int(rng.integers(1, max_channels + 1))
            R, S = int(rng.choice((1, 3))), int(rng.choice((1, 3)))
            stride, pad = int(rng.integers(1, 3)), int(rng.integers(0, 2))
            H = int(rng.integers(max(1, R - 2 * pad), max_spatial + 1))
            W = int(rng.integers(max(1, S - 2 * pad), max_spatial + 1))
            N = int(rng.integers(1, max_batch + 1))
            alpha = float(rng.choice(ALPHAS))
            weights = random_shflbw_matrix(rng, K_f, C * R * S, V, alpha)
            x = rng.standard_normal((C, H, W, N)).astype(np.float32)

            out = conv2d(weights, x, stride=stride, pad=pad, cfg=self.cfg, kernel=(R, S), threads=self.threads)
            expected = conv2d_direct_oracle(decompress(weights), x, stride=stride, pad=pad, kernel=(R, S))
            err = relative_frobenius_error(out, expected)
            results.max_relative_error = max(results.max_relative_error, err)
            results.failures += err > self.tolerance
            if R == S == 1 and stride == 1 and pad == 0:
                pointwise += 1
                flat = spmm_execute(weights, DenseMatrix(x.reshape(C, H * W * N)), self.cfg)
                results.exact_matches += bool(np.array_equal(out.reshape(K_f, -1), flat.values))

        results.pointwise_instances = pointwise
        return self._finish(results, start, dir_outpath)

    def _finish(self, results: ExecutorEvaluation, start: float, dir_outpath: str | None) -> ExecutorEvaluation:
        end = time.perf_counter() - start
        results.evaluation_time = f'{round(end/60, 2)} minutes'
        logger.info(
            f'{results.kernel} evaluation: {results.instances} instances, max relative error '
            f'{results.max_relative_error:.3e}, {results.failures} failure(s), {results.exact_matches} exact'
        )
        if dir_outpath:
            record_results(results, dir_outpath=dir_outpath)
        return results

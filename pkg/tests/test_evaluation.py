import json
import os

import numpy as np
import pytest

from src.data_models import PatternEnum, TileConfig
from src.evaluation import (
    ExecutorEvaluationService,
    PruningEvaluationService,
    instance_rng,
    random_shflbw_mask,
    record_results,
)
from src.exceptions import BadParams
from src.formats.patterns import validate_pattern


def test_instance_streams_are_independent():
    a = instance_rng(0, 1).random(4)
    assert np.array_equal(a, instance_rng(0, 1).random(4))
    assert not np.array_equal(a, instance_rng(0, 2).random(4))


def test_random_masks_are_conformant():
    for i in range(10):
        mask = random_shflbw_mask(instance_rng(3, i), 16, 12, 4, 0.25)
        assert validate_pattern(mask, PatternEnum.shfl_bw, V=4).passed
        assert mask.popcount == 16 * 3


def test_pruning_evaluation_counts(tmp_path):
    service = PruningEvaluationService(restarts=2)
    results = service.execute_evaluation(alpha=0.5, V=4, instances=6, rows=16, cols=16,
                                         optimum_instances=2, dir_outpath=str(tmp_path), show_progress=False)
    assert results.shflbw_ge_vw == 6
    assert 0 <= results.shflbw_gt_vw <= 6
    assert 0 <= results.within_90pct_of_optimum <= 2
    assert results.optimum_shape == [6, 6] and results.optimum_V == 2
    assert results.within_90pct_rate == round(results.within_90pct_of_optimum / 2, 4)
    assert results.strict_improvement_rate == round(results.shflbw_gt_vw / 6, 4)
    files = os.listdir(tmp_path)
    assert len(files) == 1 and files[0].startswith('pruning_eval_a0.5_v4_')
    with open(tmp_path / files[0]) as f:
        saved = json.load(f)
    assert saved['instances'] == 6
    assert 'strict_improvement_rate' in saved


def test_pruning_evaluation_is_reproducible():
    service = PruningEvaluationService(restarts=2)
    first = service.execute_evaluation(alpha=0.25, V=2, instances=4, rows=8, cols=8, seed=5, show_progress=False)
    second = service.execute_evaluation(alpha=0.25, V=2, instances=4, rows=8, cols=8, seed=5, show_progress=False)
    assert first.model_dump(exclude={'evaluation_time'}) == second.model_dump(exclude={'evaluation_time'})


def test_pruning_evaluation_rejects_shapes():
    with pytest.raises(BadParams):
        PruningEvaluationService().execute_evaluation(alpha=0.5, V=3, instances=1, rows=16, cols=16,
                                                      show_progress=False)


def test_spmm_evaluation_is_exact():
    service = ExecutorEvaluationService(cfg=TileConfig(T_M=8, T_N=8, T_K=4, regfile_size=64))
    results = service.evaluate_spmm(instances=12, max_dim=32, max_n=8, show_progress=False)
    assert results.failures == 0
    assert results.exact_matches == 12
    assert results.max_relative_error == 0.0
    assert results.max_error_vs_float64 < 1e-5


def test_conv_evaluation_passes(tmp_path):
    service = ExecutorEvaluationService(threads=2)
    results = service.evaluate_conv(instances=12, max_channels=4, max_spatial=6, max_batch=2,
                                    dir_outpath=str(tmp_path), show_progress=False)
    assert results.failures == 0
    assert results.exact_matches == results.pointwise_instances
    assert os.listdir(tmp_path)[0].startswith('conv_eval_')


def test_record_plain_dict(tmp_path):
    path = record_results({'kernel': 'custom', 'value': 1}, dir_outpath=str(tmp_path / 'nested'))
    assert os.path.basename(path).startswith('eval_')
    with open(path) as f:
        assert json.load(f) == {'kernel': 'custom', 'value': 1}


@pytest.mark.slow
@pytest.mark.parametrize('alpha', [0.2, 0.25, 0.5])
@pytest.mark.parametrize('V', [2, 4, 8])
def test_dominance_sweep_is_recorded(tmp_path, alpha, V):
    results = PruningEvaluationService().execute_evaluation(alpha=alpha, V=V, instances=1000, rows=32, cols=32,
                                                            dir_outpath=str(tmp_path), show_progress=False)
    assert results.shflbw_ge_vw == 1000
    [name] = os.listdir(tmp_path)
    with open(tmp_path / name) as f:
        saved = json.load(f)
    # vw >= bw is measured, not guaranteed: the block-wise budget is global
    assert saved['vw_ge_bw_rate'] == results.vw_ge_bw_rate
    assert 0.0 <= saved['vw_ge_bw_rate'] <= 1.0
    assert saved['strict_improvement_rate'] == results.strict_improvement_rate


@pytest.mark.slow
def test_shflbw_strictly_improves_half_the_time_at_quarter_density():
    results = PruningEvaluationService().execute_evaluation(alpha=0.25, V=4, instances=1000, rows=32, cols=32,
                                                            show_progress=False)
    assert results.strict_improvement_rate >= 0.5


@pytest.mark.slow
def test_tiny_instances_stay_near_the_exhaustive_optimum(tmp_path):
    results = PruningEvaluationService().execute_evaluation(alpha=0.5, V=2, instances=0, optimum_instances=1000,
                                                            dir_outpath=str(tmp_path), show_progress=False)
    assert results.optimum_shape == [6, 6]
    assert results.optimum_V == 2
    assert results.within_90pct_rate >= 0.95
    [name] = os.listdir(tmp_path)
    with open(tmp_path / name) as f:
        assert json.load(f)['within_90pct_rate'] == results.within_90pct_rate


@pytest.mark.slow
def test_spmm_random_sweep():
    results = ExecutorEvaluationService().evaluate_spmm(instances=1000, show_progress=False)
    assert results.failures == 0
    assert results.exact_matches == 1000
    assert results.max_relative_error <= 1e-5
    assert results.max_error_vs_float64 < 1e-5


@pytest.mark.slow
def test_conv_random_sweep():
    results = ExecutorEvaluationService().evaluate_conv(instances=200, show_progress=False)
    assert results.failures == 0
    assert results.exact_matches == results.pointwise_instances

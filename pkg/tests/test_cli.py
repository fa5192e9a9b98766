import hashlib
import json

import pytest

from src.cli import app
from src.formats.container import read_container, write_container
from src.formats.matrices import DenseMatrix, ShflBWMatrix, SparsityMask

ENV = {'SHFLBW_LOG_LEVEL': 'ERROR'}


def invoke(runner, *args, env=None):
    return runner.invoke(app, [str(a) for a in args], env={**ENV, **(env or {})})


def as_json(result):
    assert result.exit_code == 0, result.output
    return json.loads(result.stdout)


@pytest.fixture
def weights_8x8(runner, tmp_path):
    path = tmp_path / 'w.smx'
    as_json(invoke(runner, 'gen', '--rows', 8, '--cols', 8, '-o', path, '--seed', 1, '--json'))
    return path


def test_help(runner):
    result = runner.invoke(app, ['--help'])
    assert result.exit_code == 0
    assert 'prune' in result.stdout


def test_gen_writes_container_and_manifest(runner, tmp_path):
    out = tmp_path / 'w.smx'
    report = as_json(invoke(runner, 'gen', '--rows', 4, '--cols', 6, '-o', out, '--seed', 3, '--json'))
    assert report['shape'] == [4, 6]
    assert isinstance(read_container(out), DenseMatrix)
    manifest = json.loads((tmp_path / 'w.smx.manifest.json').read_text())
    assert manifest['command'] == 'gen'
    assert manifest['seed'] == 3
    assert manifest['output_digests'][str(out)] == hashlib.sha256(out.read_bytes()).hexdigest()


def test_gen_is_deterministic(runner, tmp_path):
    for name in ('a.smx', 'b.smx'):
        as_json(invoke(runner, 'gen', '--rows', 8, '--cols', 4, '--sparse-alpha', 0.5, '--V', 2,
                       '-o', tmp_path / name, '--seed', 7, '--json'))
    assert (tmp_path / 'a.smx').read_bytes() == (tmp_path / 'b.smx').read_bytes()
    assert isinstance(read_container(tmp_path / 'a.smx'), ShflBWMatrix)


def test_existing_output_needs_overwrite(runner, weights_8x8):
    result = invoke(runner, 'gen', '--rows', 8, '--cols', 8, '-o', weights_8x8)
    assert result.exit_code == 2
    result = invoke(runner, 'gen', '--rows', 8, '--cols', 8, '-o', weights_8x8, '--overwrite', '--json')
    assert result.exit_code == 0


def test_prune_compress_spmm_pipeline(runner, tmp_path, weights_8x8):
    mask = tmp_path / 'mask.smx'
    report = as_json(invoke(runner, 'prune', '--weights', weights_8x8, '--pattern', 'shflbw', '--alpha', 0.5,
                            '--V', 2, '-o', mask, '--json'))
    assert report['density'] == 0.5
    sidecar = json.loads((tmp_path / 'mask.smx.prune.json').read_text())
    assert sorted(sidecar['permutation']) == list(range(8))

    check = as_json(invoke(runner, 'validate', '--mask', mask, '--pattern', 'shflbw', '--V', 2, '--json'))
    assert check['passed'] is True

    sparse = tmp_path / 'a.smx'
    as_json(invoke(runner, 'compress', '--weights', weights_8x8, '--mask', mask, '-o', sparse, '--V', 2, '--json'))
    b = tmp_path / 'b.smx'
    as_json(invoke(runner, 'gen', '--rows', 8, '--cols', 5, '-o', b, '--seed', 2, '--json'))

    c = tmp_path / 'c.smx'
    report = as_json(invoke(runner, 'spmm', '--sparse', sparse, '--dense', b, '-o', c, '--tile', '4,4,2',
                            '--check', '--json'))
    assert report['passed'] is True
    assert report['max_relative_error'] == 0.0
    assert read_container(c).shape == (8, 5)
    params = json.loads((tmp_path / 'c.smx.manifest.json').read_text())['params']
    assert params == {'tile': [4, 4, 2], 'check': True, 'tolerance': 1e-5}


def test_prune_threads_do_not_change_outputs(runner, tmp_path, weights_8x8):
    for name, threads in (('m1.smx', 1), ('m4.smx', 4)):
        as_json(invoke(runner, 'prune', '--weights', weights_8x8, '--pattern', 'shflbw', '--alpha', 0.25,
                       '--V', 2, '--threads', threads, '-o', tmp_path / name, '--json'))
    assert (tmp_path / 'm1.smx').read_bytes() == (tmp_path / 'm4.smx').read_bytes()
    m1 = json.loads((tmp_path / 'm1.smx.manifest.json').read_text())
    m4 = json.loads((tmp_path / 'm4.smx.manifest.json').read_text())
    assert m1['params'] == m4['params']


def test_threads_fall_back_to_environment(runner, tmp_path, weights_8x8):
    args = ('prune', '--weights', weights_8x8, '--pattern', 'shflbw', '--alpha', 0.25, '--V', 2)
    as_json(invoke(runner, *args, '-o', tmp_path / 'env.smx', '--json', env={'SHFLBW_THREADS': '3'}))
    as_json(invoke(runner, *args, '-o', tmp_path / 'flag.smx', '--threads', 1, '--json'))
    assert (tmp_path / 'env.smx').read_bytes() == (tmp_path / 'flag.smx').read_bytes()
    result = invoke(runner, *args, '-o', tmp_path / 'bad.smx', env={'SHFLBW_THREADS': '0'})
    assert result.exit_code == 2


def test_prune_balanced_defaults_alpha(runner, tmp_path, weights_8x8):
    report = as_json(invoke(runner, 'prune', '--weights', weights_8x8, '--pattern', 'balanced', '--nm', '2,4',
                            '-o', tmp_path / 'm.smx', '--json'))
    assert report['density'] == 0.5


@pytest.mark.parametrize('args', [
    ('--pattern', 'vw', '--alpha', 0.5, '--V', 3),
    ('--pattern', 'shflbw', '--V', 2),
    ('--pattern', 'vw', '--alpha', 1.5, '--V', 2),
    ('--pattern', 'balanced', '--nm', '2'),
])
def test_prune_bad_params_exit_2(runner, tmp_path, weights_8x8, args):
    result = invoke(runner, 'prune', '--weights', weights_8x8, '-o', tmp_path / 'm.smx', *args)
    assert result.exit_code == 2


def test_validate_reports_counterexample(runner, tmp_path):
    path = write_container(SparsityMask.from_rows(['1100', '0011', '1100', '0011']), tmp_path / 'm.smx')
    result = invoke(runner, 'validate', '--mask', path, '--pattern', 'bw', '--V', 2, '--json')
    assert result.exit_code == 1
    report = json.loads(result.stdout)
    assert report['passed'] is False
    assert report['counterexample'] == [0, 0]


def test_compress_rejects_non_conformant_mask(runner, tmp_path, weights_8x8):
    mask = write_container(SparsityMask.from_rows(['1' * 8] + ['0' * 8] * 7), tmp_path / 'm.smx')
    result = invoke(runner, 'compress', '--weights', weights_8x8, '--mask', mask, '-o', tmp_path / 'a.smx', '--V', 2)
    assert result.exit_code == 2


def test_corrupt_container_exit_2(runner, tmp_path):
    bad = tmp_path / 'bad.smx'
    bad.write_bytes(b'NOPE' + bytes(24))
    result = invoke(runner, 'validate', '--mask', bad, '--pattern', 'unstructured')
    assert result.exit_code == 2


def test_conv_check(runner, tmp_path):
    w, x, y = tmp_path / 'w.smx', tmp_path / 'x.smx', tmp_path / 'y.smx'
    as_json(invoke(runner, 'gen', '--rows', 4, '--cols', 18, '--sparse-alpha', 0.5, '--V', 2, '-o', w, '--json'))
    as_json(invoke(runner, 'gen', '--rows', 2, '--cols', 50, '-o', x, '--seed', 4, '--json'))
    report = as_json(invoke(runner, 'conv', '--weights', w, '--input', x, '--height', 5, '--width', 5,
                            '--pad', 1, '-o', y, '--check', '--json'))
    assert report['output_shape'] == [4, 5, 5, 2]
    assert report['passed'] is True
    assert read_container(y).shape == (4, 50)
    params = json.loads((tmp_path / 'y.smx.manifest.json').read_text())['params']
    assert params['check'] is True and params['tolerance'] == 1e-5


def test_conv_bad_geometry(runner, tmp_path):
    w, x = tmp_path / 'w.smx', tmp_path / 'x.smx'
    as_json(invoke(runner, 'gen', '--rows', 4, '--cols', 18, '--sparse-alpha', 0.5, '--V', 2, '-o', w, '--json'))
    as_json(invoke(runner, 'gen', '--rows', 2, '--cols', 50, '-o', x, '--json'))
    result = invoke(runner, 'conv', '--weights', w, '--input', x, '--height', 3, '--width', 3, '-o', tmp_path / 'y.smx')
    assert result.exit_code == 2


def test_analyze_flexibility(runner):
    report = as_json(invoke(runner, 'analyze', '--mode', 'flexibility', '--M', 512, '--V', 128, '--json'))
    assert report['log_gain'] == pytest.approx(700.44, abs=0.01)


def test_analyze_required_reuse(runner):
    report = as_json(invoke(runner, 'analyze', '--mode', 'required-reuse', '--json'))
    assert report['required_reuse'] == pytest.approx(63, abs=1)
    assert 'reference-T4-like' in report['available_profiles']


def test_analyze_intensity(runner):
    report = as_json(invoke(runner, 'analyze', '--mode', 'intensity', '--pattern', 'unstructured',
                            '--alpha', 0.25, '--json'))
    assert report['reuse_flop_per_byte'] == pytest.approx(16)
    assert report['bruteforce_tile'] == [128, 32]
    assert report['reuse_dense'] == 32


def test_analyze_sweep_to_csv(runner, tmp_path):
    csv = tmp_path / 'sweep.csv'
    records = as_json(invoke(runner, 'analyze', '--mode', 'intensity', '--sweep', '0.25,0.5', '--csv', csv, '--json'))
    assert len(records) == 12
    assert csv.read_text().startswith('pattern,')


def test_analyze_unknown_profile(runner):
    result = invoke(runner, 'analyze', '--mode', 'required-reuse', '--profile', 'no-such-gpu')
    assert result.exit_code == 2


def test_simulate_reports_hazards(runner, tmp_path):
    report = as_json(invoke(runner, 'simulate', '--total-steps', 8, '--json'))
    assert report['counters']['stitches'] == 8
    assert report['hazards']
    assert invoke(runner, 'simulate', '--total-steps', 8, '--fail-on-hazard').exit_code == 1
    trace = tmp_path / 'trace.json'
    result = invoke(runner, 'simulate', '--total-steps', 8, '--order', 'compute_then_load', '--lead', 2,
                    '--fail-on-hazard', '--iterations', '-o', trace)
    assert result.exit_code == 0
    assert json.loads(trace.read_text())['hazards'] == []
    assert (tmp_path / 'trace.json.manifest.json').exists()


def test_evaluate_pruning(runner, tmp_path):
    report = as_json(invoke(runner, 'evaluate', '--target', 'pruning', '--instances', 3, '--rows', 8, '--cols', 8,
                            '--V', 2, '--alpha', 0.5, '--out-dir', tmp_path, '--json'))
    assert report['shflbw_ge_vw'] == 3
    assert len(list(tmp_path.glob('pruning_eval_*.json'))) == 1


def test_evaluate_conv(runner):
    report = as_json(invoke(runner, 'evaluate', '--target', 'conv', '--instances', 3, '--json'))
    assert report['failures'] == 0


def test_evaluate_unknown_target(runner):
    assert invoke(runner, 'evaluate', '--target', 'gemm', '--instances', 1).exit_code == 2

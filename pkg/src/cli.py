import json
from pathlib import Path
from typing import Annotated, Optional

import numpy as np
import typer
from loguru import logger

from src.analysis.flexibility import flexibility_log10_gain, flexibility_log_gain
from src.analysis.hardware import list_profiles, load_hardware_profile
from src.analysis.intensity import (
    intensity_report,
    intensity_table,
    max_reuse_bruteforce,
    max_reuse_closed_form,
    required_reuse,
    reuse_dense,
)
from src.app_functions import (
    configure_logging,
    emit,
    exit_on_error,
    parse_float_list,
    parse_int_tuple,
    timer,
    write_manifest,
)
from src.data_models import AnalysisModeEnum, PatternEnum, PruneConfig, ScheduleOrderEnum, TileConfig
from src.evaluation.executor_evaluation import ExecutorEvaluationService
from src.evaluation.pruning_evaluation import PruningEvaluationService
from src.evaluation.synthetic import random_dense, random_shflbw_matrix
from src.exceptions import BadGeometry, BadParams
from src.formats.container import read_container, write_container
from src.formats.conversions import (
    compress_blockwise,
    compress_shflbw,
    compress_vectorwise,
    decompress,
    mask_from_dense,
)
from src.formats.fileio import FileIO
from src.formats.matrices import DenseMatrix, ShflBWMatrix, SparsityMask, VectorWiseMatrix
from src.formats.patterns import validate_pattern
from src.pruning.scores import importance_scores
from src.pruning.shflbw import prune as run_pruner
from src.settings import load_settings
from src.spmm.conv import conv2d, conv2d_direct_oracle
from src.spmm.executor import max_relative_error, relative_frobenius_error, spmm_dense_oracle, spmm_execute
from src.spmm.pipeline import pipeline_simulate

app = typer.Typer(
    name='shflbw',
    help='Shuffled block-wise sparsity toolkit: pruning, compressed formats, tiled SpMM and analytical models.',
    no_args_is_help=True,
    add_completion=False,
)

JsonOpt = Annotated[bool, typer.Option('--json', help='Print the report as JSON on stdout.')]
VerboseOpt = Annotated[bool, typer.Option('--verbose', '-v', help='Debug logging on stderr.')]
SeedOpt = Annotated[int, typer.Option('--seed', min=0, help='Seed for every random choice.')]
ThreadsOpt = Annotated[Optional[int], typer.Option('--threads', min=1, help='Worker threads; SHFLBW_THREADS when omitted.')]
OutOpt = Annotated[Path, typer.Option('--out', '-o', help='Output path.')]
OverwriteOpt = Annotated[bool, typer.Option('--overwrite', help='Replace existing output files.')]
VOpt = Annotated[int, typer.Option('--V', '-V', min=1, help='Vector / block size.')]


@app.callback()
def main() -> None:
    '''
    Loads SHFLBW_* settings (and a .env file) and installs the log sink.
    '''
    with exit_on_error():
        settings = load_settings()
    configure_logging(settings.log_level)


def _verbose(verbose: bool) -> None:
    if verbose:
        configure_logging('DEBUG')


def _threads(threads: int | None) -> int:
    """--threads wins over SHFLBW_THREADS (already loaded from .env by the callback)."""
    return threads if threads is not None else load_settings(use_dotenv=False).threads


def _read_dense(path: Path) -> DenseMatrix:
    matrix = read_container(path)
    if isinstance(matrix, SparsityMask):
        raise BadParams(f'{path} holds a mask, expected a matrix')
    return decompress(matrix)


def _read_mask(path: Path) -> SparsityMask:
    matrix = read_container(path)
    if isinstance(matrix, SparsityMask):
        return matrix
    return mask_from_dense(decompress(matrix))


def _read_shflbw(path: Path) -> ShflBWMatrix:
    matrix = read_container(path)
    if isinstance(matrix, ShflBWMatrix):
        return matrix
    if isinstance(matrix, VectorWiseMatrix):
        return ShflBWMatrix(core=matrix, row_indices=np.arange(matrix.rows))
    raise BadParams(f'{path} holds a {type(matrix).__name__}, expected a Shfl-BW or vector-wise matrix')


@app.command()
def gen(
    rows: Annotated[int, typer.Option('--rows', min=1, help='Row count (M, or C for a conv input).')],
    cols: Annotated[int, typer.Option('--cols', min=1, help='Column count (K, or H*W*N for a conv input).')],
    out: OutOpt,
    sparse_alpha: Annotated[Optional[float], typer.Option('--sparse-alpha', help='Emit a random Shfl-BW matrix at this density.')] = None,
    V: VOpt = 1,
    scale: Annotated[float, typer.Option('--scale', help='Standard deviation of the values.')] = 1.0,
    seed: SeedOpt = 0,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Writes a seeded synthetic matrix: standard normal dense values, or a conformant Shfl-BW matrix."""
    _verbose(verbose)
    with exit_on_error():
        rng = np.random.default_rng(seed)
        if sparse_alpha is None:
            matrix = random_dense(rng, rows, cols, scale)
        else:
            if not 0 < sparse_alpha <= 1:
                raise BadParams(f'--sparse-alpha must be in (0, 1], got {sparse_alpha}')
            if rows % V:
                raise BadParams(f'V={V} does not divide rows={rows}')
            matrix = random_shflbw_matrix(rng, rows, cols, V, sparse_alpha)
        written = write_container(matrix, out, overwrite=overwrite)
        params = {'rows': rows, 'cols': cols, 'sparse_alpha': sparse_alpha, 'V': V, 'scale': scale}
        write_manifest('gen', {}, params, [written], out, seed=seed, overwrite=overwrite)
    emit({'out': written, 'kind': type(matrix).__name__, 'shape': list(matrix.shape)}, as_json, 'gen')


@app.command()
def prune(
    weights: Annotated[Path, typer.Option('--weights', help='SMX1 weight matrix.')],
    pattern: Annotated[PatternEnum, typer.Option('--pattern', help='Sparsity pattern to prune to.')],
    out: OutOpt,
    alpha: Annotated[Optional[float], typer.Option('--alpha', help='Kept fraction; n/m for balanced when omitted.')] = None,
    V: VOpt = 1,
    nm: Annotated[Optional[str], typer.Option('--nm', help='n,m for balanced pruning.')] = None,
    beta_factor: Annotated[float, typer.Option('--beta-factor', help='Unstructured pre-pruning factor.')] = 2.0,
    restarts: Annotated[int, typer.Option('--restarts', min=1, help='K-Means restarts.')] = 4,
    seed: SeedOpt = 0,
    threads: ThreadsOpt = None,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    '''
    Prunes a weight matrix by magnitude. Writes the mask container to OUT,
    the JSON sidecar (permutation, kept score, density) to OUT.prune.json
    and the run manifest.
    '''
    _verbose(verbose)
    with exit_on_error():
        threads = _threads(threads)
        n_m = parse_int_tuple(nm, 2, '--nm')
        if alpha is None:
            if pattern is not PatternEnum.balanced or n_m is None:
                raise BadParams(f'--alpha is required for pattern {pattern.value}')
            alpha = n_m[0] / n_m[1]
        cfg = PruneConfig.build(alpha=alpha, V=V, seed=seed, beta_factor=beta_factor,
                                restarts=restarts, threads=threads)
        scores = importance_scores(_read_dense(weights))
        result = run_pruner(scores, pattern, cfg, nm=n_m)
        mask_path = write_container(result.mask, out, overwrite=overwrite)
        sidecar_path = FileIO.save_as_json(f'{out}.prune.json', result.to_sidecar(), overwrite=overwrite)
        params = {'pattern': pattern.value, 'alpha': alpha, 'V': V, 'nm': list(n_m) if n_m else None,
                  'beta_factor': beta_factor, 'restarts': restarts}
        write_manifest('prune', {'weights': weights}, params, [mask_path, sidecar_path], out,
                       seed=seed, overwrite=overwrite)
    emit({'pattern': pattern.value, 'kept_score': result.kept_score, 'density': result.density,
          'out': mask_path, 'sidecar': sidecar_path}, as_json, 'prune')


@app.command()
def compress(
    weights: Annotated[Path, typer.Option('--weights', help='SMX1 weight matrix.')],
    mask: Annotated[Path, typer.Option('--mask', help='SMX1 mask (or any matrix, its non-zeros are used).')],
    out: OutOpt,
    V: VOpt = 1,
    pattern: Annotated[PatternEnum, typer.Option('--pattern', help='shflbw, vw or bw.')] = PatternEnum.shfl_bw,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Compresses pruned weights into the Shfl-BW, vector-wise or block-wise container."""
    _verbose(verbose)
    with exit_on_error():
        dense, support = _read_dense(weights), _read_mask(mask)
        if pattern is PatternEnum.shfl_bw:
            matrix = compress_shflbw(dense, support, V)
        elif pattern is PatternEnum.vector_wise:
            matrix = compress_vectorwise(dense, support, V)
        elif pattern is PatternEnum.block_wise:
            matrix = compress_blockwise(dense, support, V)
        else:
            raise BadParams(f'no compressed format for pattern {pattern.value}')
        written = write_container(matrix, out, overwrite=overwrite)
        write_manifest('compress', {'weights': weights, 'mask': mask}, {'pattern': pattern.value, 'V': V},
                       [written], out, overwrite=overwrite)
    emit({'out': written, 'kind': type(matrix).__name__, 'nnz': int(support.popcount)}, as_json, 'compress')


@app.command()
def validate(
    mask: Annotated[Path, typer.Option('--mask', help='SMX1 mask (or any matrix, its non-zeros are used).')],
    pattern: Annotated[PatternEnum, typer.Option('--pattern', help='Pattern to check against.')],
    V: Annotated[Optional[int], typer.Option('--V', '-V', min=1, help='Vector / block size.')] = None,
    nm: Annotated[Optional[str], typer.Option('--nm', help='n,m for balanced.')] = None,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Checks a mask against a sparsity pattern; exits 1 when it does not conform."""
    _verbose(verbose)
    with exit_on_error():
        report = validate_pattern(_read_mask(mask), pattern, V=V, nm=parse_int_tuple(nm, 2, '--nm'))
    emit(report.model_dump(mode='json'), as_json, 'validate')
    if not report.passed:
        raise typer.Exit(code=1)


@app.command()
def spmm(
    sparse: Annotated[Path, typer.Option('--sparse', help='SMX1 Shfl-BW (or vector-wise) matrix A.')],
    dense: Annotated[Path, typer.Option('--dense', help='SMX1 dense matrix B.')],
    out: OutOpt,
    tile: Annotated[Optional[str], typer.Option('--tile', help='T_M,T_N,T_K.')] = None,
    check: Annotated[bool, typer.Option('--check', help='Compare against the dense oracle.')] = False,
    tolerance: Annotated[float, typer.Option('--tolerance', help='Allowed max relative error for --check.')] = 1e-5,
    threads: ThreadsOpt = None,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """C = A x B with the tiled Shfl-BW executor; --check exits 1 on a numeric mismatch."""
    _verbose(verbose)
    with exit_on_error():
        threads = _threads(threads)
        tiles = parse_int_tuple(tile, 3, '--tile')
        cfg = TileConfig.build(T_M=tiles[0], T_N=tiles[1], T_K=tiles[2]) if tiles else TileConfig()
        A, B = _read_shflbw(sparse), _read_dense(dense)
        with timer('spmm finished in {time}'):
            C = spmm_execute(A, B, cfg, threads=threads)
        written = write_container(C, out, overwrite=overwrite)
        params = {'tile': list(tiles) if tiles else None, 'check': check, 'tolerance': tolerance}
        write_manifest('spmm', {'sparse': sparse, 'dense': dense}, params, [written], out, overwrite=overwrite)
    report = {'out': written, 'shape': list(C.shape)}
    if check:
        expected = spmm_dense_oracle(decompress(A), B)
        report['max_relative_error'] = max_relative_error(C, expected)
        report['passed'] = report['max_relative_error'] <= tolerance
    emit(report, as_json, 'spmm')
    if check and not report['passed']:
        raise typer.Exit(code=1)


@app.command()
def conv(
    weights: Annotated[Path, typer.Option('--weights', help='SMX1 Shfl-BW weights K_f x (C*R*S).')],
    input_path: Annotated[Path, typer.Option('--input', help='SMX1 dense input C x (H*W*N).')],
    height: Annotated[int, typer.Option('--height', min=1, help='Input height H.')],
    width: Annotated[int, typer.Option('--width', min=1, help='Input width W.')],
    out: OutOpt,
    kernel: Annotated[Optional[str], typer.Option('--kernel', help='R,S; square when omitted.')] = None,
    stride: Annotated[int, typer.Option('--stride', help='Convolution stride.')] = 1,
    pad: Annotated[int, typer.Option('--pad', help='Zero padding on each side.')] = 0,
    check: Annotated[bool, typer.Option('--check', help='Compare against direct convolution.')] = False,
    tolerance: Annotated[float, typer.Option('--tolerance', help='Allowed relative error for --check.')] = 1e-5,
    threads: ThreadsOpt = None,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    '''
    Implicit-GEMM convolution. The output is written as a K_f x (P*Q*N)
    dense matrix; --check exits 1 on a numeric mismatch.
    '''
    _verbose(verbose)
    with exit_on_error():
        threads = _threads(threads)
        rs = parse_int_tuple(kernel, 2, '--kernel')
        W_s, x = _read_shflbw(weights), _read_dense(input_path)
        C = x.rows
        if x.cols % (height * width):
            raise BadGeometry(f'input has {x.cols} columns, not a multiple of H*W={height * width}')
        N = x.cols // (height * width)
        tensor = x.values.reshape(C, height, width, N)
        y = conv2d(W_s, tensor, stride=stride, pad=pad, kernel=rs, threads=threads)
        K_f, P, Q, _ = y.shape
        written = write_container(DenseMatrix(y.reshape(K_f, P * Q * N)), out, overwrite=overwrite)
        params = {'height': height, 'width': width, 'kernel': list(rs) if rs else None, 'stride': stride, 'pad': pad,
                  'check': check, 'tolerance': tolerance}
        write_manifest('conv', {'weights': weights, 'input': input_path}, params, [written], out, overwrite=overwrite)
    report = {'out': written, 'output_shape': [K_f, P, Q, N]}
    if check:
        expected = conv2d_direct_oracle(decompress(W_s), tensor, stride=stride, pad=pad, kernel=rs)
        report['relative_error'] = relative_frobenius_error(y, expected)
        report['passed'] = report['relative_error'] <= tolerance
    emit(report, as_json, 'conv')
    if check and not report['passed']:
        raise typer.Exit(code=1)


@app.command()
def analyze(
    mode: Annotated[AnalysisModeEnum, typer.Option('--mode', help='intensity, flexibility or required-reuse.')],
    M: Annotated[Optional[int], typer.Option('--M', '-M', min=1, help='Row count for flexibility.')] = None,
    V: Annotated[Optional[int], typer.Option('--V', '-V', min=1, help='Group / block size.')] = None,
    exact: Annotated[bool, typer.Option('--exact', help='Big-integer flexibility.')] = False,
    pattern: Annotated[PatternEnum, typer.Option('--pattern', help='Pattern for intensity.')] = PatternEnum.unstructured,
    alpha: Annotated[float, typer.Option('--alpha', help='Kept fraction.')] = 1.0,
    regfile: Annotated[Optional[int], typer.Option('--regfile', min=1, help='Accumulator register file size.')] = None,
    profile: Annotated[str, typer.Option('--profile', help='Hardware profile name or JSON path.')] = 'reference-A100-like',
    sweep: Annotated[Optional[str], typer.Option('--sweep', help='Comma separated alphas; tabulates every pattern.')] = None,
    csv: Annotated[Optional[Path], typer.Option('--csv', help='Also save the sweep table as csv.')] = None,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Analytical models: pattern flexibility, operation intensity and required reuse."""
    _verbose(verbose)
    with exit_on_error():
        settings = load_settings(use_dotenv=False)
        if mode is AnalysisModeEnum.flexibility:
            if M is None or V is None:
                raise BadParams('flexibility needs --M and --V')
            report = {'M': M, 'V': V, 'log_gain': flexibility_log_gain(M, V, exact=exact),
                      'log10_gain': flexibility_log10_gain(M, V)}
            emit(report, as_json, 'flexibility')
            return
        hw = load_hardware_profile(profile, settings.profile_dir)
        if regfile is not None:
            hw = hw.model_copy(update={'regfile_size': regfile})
        if mode is AnalysisModeEnum.required_reuse:
            emit({'profile': hw.name, 'required_reuse': required_reuse(hw),
                  'available_profiles': list_profiles(settings.profile_dir)}, as_json, 'required reuse')
            return
        if sweep:
            table = intensity_table(list(PatternEnum), parse_float_list(sweep, '--sweep'), V or int(hw.regfile_size ** 0.5), hw)
            if csv:
                FileIO.save_as_csv(csv, table, overwrite=overwrite)
            emit(json.loads(table.to_json(orient='records')), as_json, 'intensity sweep')
            return
        report = intensity_report(pattern, alpha, V, hw).model_dump(mode='json')
        closed = max_reuse_closed_form(alpha, hw.regfile_size, hw.bytes_per_value)
        brute, t_m, t_n = max_reuse_bruteforce(alpha, hw.regfile_size, hw.bytes_per_value)
        report.update({'max_reuse_closed_form': closed, 'max_reuse_bruteforce': brute,
                       'bruteforce_tile': [t_m, t_n],
                       'reuse_dense': reuse_dense(hw.regfile_size, hw.bytes_per_value)})
    emit(report, as_json, 'intensity')


@app.command()
def simulate(
    total_steps: Annotated[int, typer.Option('--total-steps', min=0, help='K-chunks to process.')],
    pipe_stage: Annotated[int, typer.Option('--pipe-stage', min=2, help='Staging buffers.')] = 2,
    meta_prefetch: Annotated[int, typer.Option('--meta-prefetch', min=1, help='Metadata bulk size.')] = 4,
    order: Annotated[ScheduleOrderEnum, typer.Option('--order', help='Order of stitch and MMA in an iteration.')] = ScheduleOrderEnum.load_then_compute,
    lead: Annotated[Optional[int], typer.Option('--lead', min=1, help='Distance between load and compute step.')] = None,
    iterations: Annotated[bool, typer.Option('--iterations', help='Include per-iteration records.')] = False,
    out: Annotated[Optional[Path], typer.Option('--out', '-o', help='Also write the trace as JSON.')] = None,
    fail_on_hazard: Annotated[bool, typer.Option('--fail-on-hazard', help='Exit 1 when a hazard is detected.')] = False,
    overwrite: OverwriteOpt = False,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Step-level simulation of the metadata-prefetch pipeline with hazard detection."""
    _verbose(verbose)
    with exit_on_error():
        cfg = TileConfig.build(pipe_stage=pipe_stage, meta_prefetch_stage=meta_prefetch)
        trace = pipeline_simulate(total_steps, cfg, order, lead=lead)
        payload = json.loads(trace.to_json(include_iterations=iterations))
        if out:
            written = FileIO.save_as_json(out, payload, overwrite=overwrite)
            params = {'total_steps': total_steps, 'pipe_stage': pipe_stage, 'meta_prefetch': meta_prefetch,
                      'order': order.value, 'lead': lead}
            write_manifest('simulate', {}, params, [written], written, overwrite=overwrite)
    if as_json:
        emit(payload, True)
    else:
        emit({**trace.counters.model_dump(), 'hazards': len(trace.hazards), **trace.config}, False, 'simulate')
    if fail_on_hazard and not trace.hazard_free:
        raise typer.Exit(code=1)


@app.command()
def evaluate(
    target: Annotated[str, typer.Option('--target', help='pruning, spmm or conv.')] = 'pruning',
    instances: Annotated[int, typer.Option('--instances', min=1, help='Random instances.')] = 1000,
    alpha: Annotated[float, typer.Option('--alpha', help='Kept fraction (pruning).')] = 0.25,
    V: VOpt = 4,
    rows: Annotated[int, typer.Option('--rows', min=1, help='Score matrix rows (pruning).')] = 32,
    cols: Annotated[int, typer.Option('--cols', min=1, help='Score matrix columns (pruning).')] = 32,
    optimum_instances: Annotated[int, typer.Option('--optimum-instances', min=0, help='Tiny instances checked against the exhaustive optimum.')] = 0,
    out_dir: Annotated[Optional[Path], typer.Option('--out-dir', help='Record the results as timestamped JSON here.')] = None,
    seed: SeedOpt = 0,
    threads: ThreadsOpt = None,
    as_json: JsonOpt = False,
    verbose: VerboseOpt = False,
) -> None:
    """Calibration sweeps: pruning dominance and optimality, SpMM and convolution oracle agreement."""
    _verbose(verbose)
    with exit_on_error():
        threads = _threads(threads)
        dir_outpath = str(out_dir) if out_dir else None
        with timer(f'{target} evaluation finished in {{time}}'):
            if target == 'pruning':
                results = PruningEvaluationService(threads=threads).execute_evaluation(
                    alpha, V, instances=instances, rows=rows, cols=cols, seed=seed,
                    optimum_instances=optimum_instances, dir_outpath=dir_outpath, show_progress=not as_json)
            elif target in ('spmm', 'conv'):
                service = ExecutorEvaluationService(threads=threads)
                run = service.evaluate_spmm if target == 'spmm' else service.evaluate_conv
                results = run(instances=instances, seed=seed, dir_outpath=dir_outpath, show_progress=not as_json)
            else:
                raise BadParams(f'unknown evaluation target {target!r}; use pruning, spmm or conv')
    logger.debug(f'evaluation results: {results}')
    emit(results.model_dump(mode='json'), as_json, f'{target} evaluation')
    if getattr(results, 'failures', 0):
        raise typer.Exit(code=1)


if __name__ == '__main__':
    app()

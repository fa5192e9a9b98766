import math

import numpy as np
import pandas as pd

from src.data_models import HardwareModel, IntensityReport, PatternEnum
from src.exceptions import BadParams

DEFAULT_REGFILE_SIZE = 4096
DEFAULT_BYTES_PER_VALUE = 2


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise BadParams(f'alpha must be in (0, 1], got {alpha}')


def _check_regfile(regfile_size: int) -> None:
    if regfile_size < 1:
        raise BadParams(f'regfile_size must be >= 1, got {regfile_size}')


def tile_opt_dense(regfile_size: int) -> float:
    """Square accumulator tile that fills the register file."""
    _check_regfile(regfile_size)
    return math.sqrt(regfile_size)


def tile_intensity(alpha: float,
                   T_M: int | np.ndarray,
                   T_N: int | np.ndarray,
                   bytes_per_value: float = DEFAULT_BYTES_PER_VALUE
                   ) -> float | np.ndarray:
    '''
    Flop per byte of one T_M x T_N output tile: 2*alpha*T_M*T_N*T_K flops
    over (alpha*T_M*T_K + T_K*T_N) loaded values. T_K cancels. Metadata
    bytes of the sparse operand are not counted.
    '''
    return 2 * alpha * T_M * T_N / ((alpha * T_M + T_N) * bytes_per_value)


def reuse_dense(regfile_size: int, bytes_per_value: float = DEFAULT_BYTES_PER_VALUE) -> float:
    """Dense GEMM reuse with the optimal square tile; sqrt(regfile)/2 at 2 bytes per value."""
    T = tile_opt_dense(regfile_size)
    return float(tile_intensity(1.0, T, T, bytes_per_value))


def max_reuse_closed_form(alpha: float,
                          regfile_size: int,
                          bytes_per_value: float = DEFAULT_BYTES_PER_VALUE
                          ) -> float:
    '''
    Continuous optimum of tile_intensity under T_M*T_N <= regfile_size,
    reached at T_M = sqrt(regfile/alpha): sqrt(alpha) * reuse_dense.
    '''
    _check_alpha(alpha)
    return math.sqrt(alpha) * reuse_dense(regfile_size, bytes_per_value)


def max_reuse_bruteforce(alpha: float,
                         regfile_size: int,
                         bytes_per_value: float = DEFAULT_BYTES_PER_VALUE
                         ) -> tuple[float, int, int]:
    '''
    Exhaustive search over integer tiles. For a fixed T_M the intensity
    grows with T_N, so only T_N = regfile // T_M is evaluated. The smallest
    T_M among equal maxima wins. Returns (value, T_M, T_N).
    '''
    _check_alpha(alpha)
    _check_regfile(regfile_size)
    T_M = np.arange(1, regfile_size + 1, dtype=np.float64)
    T_N = np.floor_divide(regfile_size, T_M)
    values = tile_intensity(alpha, T_M, T_N, bytes_per_value)
    best = int(np.argmax(values))
    return float(values[best]), int(T_M[best]), int(T_N[best])


def required_reuse(hw: HardwareModel) -> float:
    """MACs that must be performed per value loaded from the last-level cache to hit peak."""
    return hw.peak_mac_per_s / (hw.llc_bandwidth_bytes_per_s / hw.bytes_per_value)


def intensity_report(pattern: PatternEnum | str,
                     alpha: float,
                     V: int | None = None,
                     hw: HardwareModel | None = None
                     ) -> IntensityReport:
    '''
    Best achievable operation intensity of a pattern at density alpha.

    Args:
    -----
    pattern : PatternEnum | str
        dense, unstructured, balanced, vw, bw or shflbw.
    alpha : float
        Kept fraction in (0, 1].
    V : int | None
        Block / vector size, required by the tiled patterns.
    hw : HardwareModel | None
        Supplies regfile_size and bytes_per_value; 4096 and 2 when omitted.

    Unstructured and balanced masks cannot tile the sparse operand densely,
    so they get max_reuse_closed_form(alpha). Tiled patterns reach
    reuse_dense once V >= T_opt; a smaller V caps the tile at V x V, which
    is reported with a note.
    '''
    pattern = PatternEnum(pattern)
    _check_alpha(alpha)
    regfile = hw.regfile_size if hw else DEFAULT_REGFILE_SIZE
    bpv = hw.bytes_per_value if hw else DEFAULT_BYTES_PER_VALUE
    t_opt = tile_opt_dense(regfile)
    dense = reuse_dense(regfile, bpv)
    note = None
    if pattern is PatternEnum.dense:
        reuse = dense
    elif pattern in (PatternEnum.unstructured, PatternEnum.balanced):
        reuse = max_reuse_closed_form(alpha, regfile, bpv)
    else:
        if V is None or V < 1:
            raise BadParams(f'pattern {pattern.value} needs V >= 1')
        if V >= t_opt:
            reuse = dense
        else:
            reuse = float(tile_intensity(1.0, V, V, bpv))
            note = f'V={V} below T_opt={t_opt:g}: tile bounded by the block size'
    return IntensityReport(
        pattern=pattern,
        alpha=alpha,
        V=V,
        reuse_flop_per_byte=reuse,
        reuse_dense_flop_per_byte=dense,
        ratio_to_dense=reuse / dense,
        tile_opt=t_opt,
        note=note,
    )


def intensity_table(patterns: list[PatternEnum | str],
                    alphas: list[float],
                    V: int | None = None,
                    hw: HardwareModel | None = None
                    ) -> pd.DataFrame:
    """One intensity_report row per (pattern, alpha)."""
    rows = [
        intensity_report(p, a, V if PatternEnum(p).tiles_dense else None, hw).model_dump(mode='json')
        for p in patterns
        for a in alphas
    ]
    return pd.DataFrame.from_records(rows)

from collections import defaultdict

import numpy as np
from loguru import logger

from src.data_models import PatternEnum, ValidationReport
from src.exceptions import BadParams
from src.formats.matrices import SparsityMask


def _require_v(V: int | None, extent: int, what: str) -> int:
    if V is None or V < 1:
        raise BadParams(f'pattern needs a positive V, got {V}')
    if extent % V:
        raise BadParams(f'V={V} does not divide {what}={extent}')
    return V


def support_classes(mask: SparsityMask) -> dict[bytes, list[int]]:
    '''
    Groups row indices by identical column support. Keys are the packed row
    bits; each value lists rows in ascending order. Insertion order follows
    the smallest row of each class.
    '''
    classes: dict[bytes, list[int]] = defaultdict(list)
    packed = np.packbits(mask.bits, axis=1)
    for r in range(mask.rows):
        classes[packed[r].tobytes()].append(r)
    return dict(classes)


def _check_vector_wise(mask: SparsityMask, V: int) -> ValidationReport:
    bits = mask.bits
    for g in range(mask.rows // V):
        block = bits[g * V:(g + 1) * V]
        diff = block != block[0]
        if diff.any():
            r, c = np.argwhere(diff)[0]
            return ValidationReport(
                pattern=PatternEnum.vector_wise, passed=False,
                counterexample=(int(g * V + r), int(c)),
                message=f'row {g * V + r} differs from row {g * V} of its group at column {c}',
            )
    return ValidationReport(pattern=PatternEnum.vector_wise, passed=True)


def _check_block_wise(mask: SparsityMask, V: int) -> ValidationReport:
    grid = mask.bits.reshape(mask.rows // V, V, mask.cols // V, V)
    full = grid.all(axis=(1, 3))
    empty = ~grid.any(axis=(1, 3))
    mixed = ~(full | empty)
    if mixed.any():
        br, bc = np.argwhere(mixed)[0]
        return ValidationReport(
            pattern=PatternEnum.block_wise, passed=False,
            counterexample=(int(br * V), int(bc * V)),
            message=f'block ({br}, {bc}) is partially populated',
        )
    return ValidationReport(pattern=PatternEnum.block_wise, passed=True)


def _check_shfl_bw(mask: SparsityMask, V: int) -> ValidationReport:
    for rows in support_classes(mask).values():
        if len(rows) % V:
            r = rows[0]
            return ValidationReport(
                pattern=PatternEnum.shfl_bw, passed=False,
                counterexample=(r, 0),
                message=f'support of row {r} occurs {len(rows)} times, not a multiple of V={V}',
            )
    return ValidationReport(pattern=PatternEnum.shfl_bw, passed=True)


def _check_balanced(mask: SparsityMask, n: int, m: int) -> ValidationReport:
    '''
    Every window of m consecutive row elements must keep exactly n entries;
    windows that keep fewer fail as well.
    '''
    windows = mask.bits.reshape(mask.rows, mask.cols // m, m).sum(axis=2)
    wrong = windows != n
    if wrong.any():
        r, w = np.argwhere(wrong)[0]
        return ValidationReport(
            pattern=PatternEnum.balanced, passed=False,
            counterexample=(int(r), int(w * m)),
            message=f'row {r} keeps {windows[r, w]} != {n} entries in window starting at column {w * m}',
        )
    return ValidationReport(pattern=PatternEnum.balanced, passed=True)


def validate_pattern(mask: SparsityMask,
                     pattern: PatternEnum | str,
                     V: int | None = None,
                     nm: tuple[int, int] | None = None
                     ) -> ValidationReport:
    '''
    Checks a mask against one sparsity pattern and reports the first
    counterexample (row, col) on failure.

    Args:
    -----
    mask : SparsityMask
        Mask under test.
    pattern : PatternEnum | str
        One of unstructured, vw, bw, shflbw, balanced (aliases such as
        'vector_wise' or 'shfl_bw' are accepted).
    V : int
        Vector / block size for vw, bw and shflbw.
    nm : tuple[int, int]
        (n, m) for balanced sparsity: exactly n kept entries in every
        consecutive window of m columns.
    '''
    pattern = PatternEnum(pattern)
    if pattern in (PatternEnum.unstructured, PatternEnum.dense):
        if pattern is PatternEnum.dense and mask.popcount != mask.rows * mask.cols:
            r, c = np.argwhere(~mask.bits)[0]
            return ValidationReport(pattern=pattern, passed=False, counterexample=(int(r), int(c)),
                                    message='dense pattern requires every entry kept')
        return ValidationReport(pattern=pattern, passed=True)
    if pattern is PatternEnum.balanced:
        if nm is None:
            raise BadParams('balanced pattern needs nm=(n, m)')
        n, m = nm
        if m < 1 or n < 0 or n > m:
            raise BadParams(f'balanced pattern needs 0 <= n <= m, got n={n}, m={m}')
        if mask.cols % m:
            raise BadParams(f'm={m} does not divide cols={mask.cols}')
        return _check_balanced(mask, n, m)
    V = _require_v(V, mask.rows, 'rows')
    if pattern is PatternEnum.vector_wise:
        report = _check_vector_wise(mask, V)
    elif pattern is PatternEnum.block_wise:
        _require_v(V, mask.cols, 'cols')
        report = _check_block_wise(mask, V)
    else:
        report = _check_shfl_bw(mask, V)
    if not report.passed:
        logger.debug(f'{pattern.value} validation failed: {report.message}')
    return report

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.exceptions import BadParams, ShapeMismatch


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """
    Row-major 2-D float32 matrix; the oracle representation every sparse
    type decompresses to.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float32, order='C', copy=True)
        if arr.ndim != 2:
            raise ShapeMismatch(f'DenseMatrix needs a 2-D array, got {arr.ndim}-D')
        if not np.all(np.isfinite(arr)):
            raise BadParams('DenseMatrix values must be finite')
        object.__setattr__(self, 'values', _frozen(arr))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> 'DenseMatrix':
        return cls(np.asarray(rows, dtype=np.float32))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'DenseMatrix':
        return cls(np.zeros((rows, cols), dtype=np.float32))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def equals(self, other: 'DenseMatrix') -> bool:
        """Bit-identical comparison (shape and every float)."""
        return self.shape == other.shape and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class SparsityMask:
    """Binary matrix marking kept weights (True = kept)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.bits, copy=True)
        if arr.ndim != 2:
            raise ShapeMismatch(f'SparsityMask needs a 2-D array, got {arr.ndim}-D')
        if arr.dtype != np.bool_:
            if not np.all((arr == 0) | (arr == 1)):
                raise BadParams('SparsityMask entries must be 0 or 1')
            arr = arr.astype(np.bool_)
        object.__setattr__(self, 'bits', _frozen(np.ascontiguousarray(arr)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]] | Sequence[str]) -> 'SparsityMask':
        '''
        Builds a mask from nested 0/1 lists or from bit strings such as
        ['1100', '0011'].
        '''
        if rows and isinstance(rows[0], str):
            rows = [[int(ch) for ch in row] for row in rows]
        return cls(np.asarray(rows, dtype=np.int8))

    @classmethod
    def ones(cls, rows: int, cols: int) -> 'SparsityMask':
        return cls(np.ones((rows, cols), dtype=np.bool_))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'SparsityMask':
        return cls(np.zeros((rows, cols), dtype=np.bool_))

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def density(self) -> float:
        total = self.rows * self.cols
        return self.popcount / total if total else 0.0

    def equals(self, other: 'SparsityMask') -> bool:
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)


@dataclass(frozen=True, eq=False)
class VectorWiseMatrix:
    """
    Groups of V consecutive rows sharing one sorted column support.

    values[g] has shape (V, n_g); on disk it is laid out column-major so each
    V x 1 vector is contiguous.
    """

    rows: int
    cols: int
    V: int
    col_indices: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.V < 1 or self.rows % self.V:
            raise BadParams(f'V={self.V} must divide rows={self.rows}')
        groups = self.rows // self.V
        if len(self.col_indices) != groups or len(self.values) != groups:
            raise ShapeMismatch(
                f'expected {groups} groups, got {len(self.col_indices)} index lists '
                f'and {len(self.values)} value blocks'
            )
        cols, vals = [], []
        for g, (idx, block) in enumerate(zip(self.col_indices, self.values)):
            idx = np.array(idx, dtype=np.int64).reshape(-1)
            block = np.array(block, dtype=np.float32, copy=True).reshape(self.V, idx.size)
            if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.cols):
                raise BadParams(f'group {g}: column indices must be strictly increasing and < {self.cols}')
            if not np.all(np.isfinite(block)):
                raise BadParams(f'group {g}: values must be finite')
            cols.append(_frozen(idx))
            vals.append(_frozen(block))
        object.__setattr__(self, 'col_indices', tuple(cols))
        object.__setattr__(self, 'values', tuple(vals))

    @property
    def group_count(self) -> int:
        return self.rows // self.V

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return sum(idx.size for idx in self.col_indices) * self.V


@dataclass(frozen=True, eq=False)
class ShflBWMatrix:
    """
    Vector-wise core plus the original row of every compressed row:
    compressed row r lives at original row row_indices[r].
    """

    core: VectorWiseMatrix
    row_indices: np.ndarray

    def __post_init__(self) -> None:
        idx = np.array(self.row_indices, dtype=np.int64).reshape(-1)
        if idx.size != self.core.rows or not np.array_equal(np.sort(idx), np.arange(self.core.rows)):
            raise BadParams(f'row_indices must be a permutation of 0..{self.core.rows - 1}')
        object.__setattr__(self, 'row_indices', _frozen(idx))

    @property
    def rows(self) -> int:
        return self.core.rows

    @property
    def cols(self) -> int:
        return self.core.cols

    @property
    def V(self) -> int:
        return self.core.V

    @property
    def group_count(self) -> int:
        return self.core.group_count

    @property
    def shape(self) -> tuple[int, int]:
        return self.core.shape

    @property
    def nnz(self) -> int:
        return self.core.nnz

    def group_rows(self, g: int) -> np.ndarray:
        """Original row positions of group g, in compressed order."""
        return self.row_indices[g * self.V:(g + 1) * self.V]


@dataclass(frozen=True, eq=False)
class BlockWiseMatrix:
    """Dense V x V tiles on an aligned grid, coordinates sorted lexicographically."""

    rows: int
    cols: int
    V: int
    coords: np.ndarray
    blocks: np.ndarray

    def __post_init__(self) -> None:
        if self.V < 1 or self.rows % self.V or self.cols % self.V:
            raise BadParams(f'V={self.V} must divide both {self.rows} and {self.cols}')
        coords = np.array(self.coords, dtype=np.int64).reshape(-1, 2)
        blocks = np.array(self.blocks, dtype=np.float32, copy=True).reshape(coords.shape[0], self.V, self.V)
        grid = (self.rows // self.V, self.cols // self.V)
        if coords.size:
            if np.any(coords < 0) or np.any(coords[:, 0] >= grid[0]) or np.any(coords[:, 1] >= grid[1]):
                raise BadParams(f'block coordinates outside the {grid[0]}x{grid[1]} grid')
            keys = coords[:, 0] * grid[1] + coords[:, 1]
            if np.any(np.diff(keys) <= 0):
                raise BadParams('block coordinates must be unique and sorted lexicographically')
        if not np.all(np.isfinite(blocks)):
            raise BadParams('block values must be finite')
        object.__setattr__(self, 'coords', _frozen(coords))
        object.__setattr__(self, 'blocks', _frozen(blocks))

    @property
    def block_count(self) -> int:
        return self.coords.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True, eq=False)
class StitchedGroup:
    """
    One group's columns packed into dense V x tile_width tiles. column_maps
    holds the original column of every tile column, -1 for zero padding.
    """

    tiles: np.ndarray
    column_maps: np.ndarray
    padding: int

    @property
    def tile_count(self) -> int:
        return self.tiles.shape[0]


SparseMatrix = VectorWiseMatrix | ShflBWMatrix | BlockWiseMatrix
AnyMatrix = DenseMatrix | SparsityMask | VectorWiseMatrix | ShflBWMatrix | BlockWiseMatrix

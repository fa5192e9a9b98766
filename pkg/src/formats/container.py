import os
from enum import IntEnum

import numpy as np
from loguru import logger

from src.exceptions import BadMagic, CorruptPayload, UnsupportedVersion
from src.formats.fileio import FileIO
from src.formats.matrices import (
    AnyMatrix,
    BlockWiseMatrix,
    DenseMatrix,
    ShflBWMatrix,
    SparsityMask,
    VectorWiseMatrix,
)

MAGIC = b'SMX1'
VERSION = 1
_U32 = np.dtype('<u4')
_F32 = np.dtype('<f4')


class ContainerKind(IntEnum):
    dense = 0
    mask = 1
    vector_wise = 2
    shfl_bw = 3
    block_wise = 4


def _u32(*values: int) -> bytes:
    return np.asarray(values, dtype=_U32).tobytes()


def _vector_payload(core: VectorWiseMatrix) -> list[bytes]:
    parts = []
    for cols, block in zip(core.col_indices, core.values):
        parts.append(_u32(cols.size))
        parts.append(cols.astype(_U32).tobytes())
        # column-major: each V x 1 vector contiguous
        parts.append(block.astype(_F32).ravel(order='F').tobytes())
    return parts


def encode_container(matrix: AnyMatrix) -> bytes:
    '''
    Serializes any matrix type into SMX1 bytes (little-endian):
    magic, u32 version, kind, M, K, V, G, then the kind-specific payload.
    '''
    if isinstance(matrix, DenseMatrix):
        header = (ContainerKind.dense, matrix.rows, matrix.cols, 0, 0)
        payload = [matrix.values.astype(_F32).tobytes()]
    elif isinstance(matrix, SparsityMask):
        header = (ContainerKind.mask, matrix.rows, matrix.cols, 0, 0)
        payload = [np.packbits(matrix.bits.ravel()).tobytes()]
    elif isinstance(matrix, VectorWiseMatrix):
        header = (ContainerKind.vector_wise, matrix.rows, matrix.cols, matrix.V, matrix.group_count)
        payload = _vector_payload(matrix)
    elif isinstance(matrix, ShflBWMatrix):
        header = (ContainerKind.shfl_bw, matrix.rows, matrix.cols, matrix.V, matrix.group_count)
        payload = [matrix.row_indices.astype(_U32).tobytes(), *_vector_payload(matrix.core)]
    elif isinstance(matrix, BlockWiseMatrix):
        header = (ContainerKind.block_wise, matrix.rows, matrix.cols, matrix.V, matrix.rows // matrix.V)
        payload = [
            _u32(matrix.block_count),
            matrix.coords.astype(_U32).tobytes(),
            matrix.blocks.astype(_F32).tobytes(),
        ]
    else:
        raise TypeError(f'cannot encode {type(matrix).__name__}')
    return b''.join([MAGIC, _u32(VERSION, *header), *payload])


class _Reader:
    """Bounds-checked cursor over a payload."""

    def __init__(self, buf: bytes, offset: int) -> None:
        self.buf = buf
        self.offset = offset

    def take(self, dtype: np.dtype, count: int) -> np.ndarray:
        nbytes = dtype.itemsize * count
        if self.offset + nbytes > len(self.buf):
            raise CorruptPayload(
                f'payload truncated: need {nbytes} bytes at offset {self.offset}, '
                f'{len(self.buf) - self.offset} left'
            )
        arr = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.offset)
        self.offset += nbytes
        return arr

    def take_raw(self, nbytes: int) -> bytes:
        if self.offset + nbytes > len(self.buf):
            raise CorruptPayload(f'payload truncated at offset {self.offset}')
        chunk = self.buf[self.offset:self.offset + nbytes]
        self.offset += nbytes
        return chunk

    def finish(self) -> None:
        if self.offset != len(self.buf):
            raise CorruptPayload(f'{len(self.buf) - self.offset} trailing bytes after payload')


def _read_vector_core(reader: _Reader, M: int, K: int, V: int, G: int) -> VectorWiseMatrix:
    if V == 0 or M % V or G != M // V:
        raise CorruptPayload(f'inconsistent vector-wise header M={M}, V={V}, G={G}')
    col_indices, values = [], []
    for _ in range(G):
        n_g = int(reader.take(_U32, 1)[0])
        col_indices.append(reader.take(_U32, n_g).astype(np.int64))
        values.append(reader.take(_F32, V * n_g).reshape(V, n_g, order='F'))
    try:
        return VectorWiseMatrix(rows=M, cols=K, V=V, col_indices=tuple(col_indices), values=tuple(values))
    except ValueError as e:
        raise CorruptPayload(f'invalid vector-wise payload: {e}') from e


def decode_container(buf: bytes) -> AnyMatrix:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagic(f'expected magic {MAGIC!r}, got {buf[:4]!r}')
    reader = _Reader(buf, 4)
    version, kind, M, K, V, G = (int(x) for x in reader.take(_U32, 6))
    if version != VERSION:
        raise UnsupportedVersion(f'SMX1 version {version} is not supported (expected {VERSION})')
    try:
        kind = ContainerKind(kind)
    except ValueError as e:
        raise CorruptPayload(f'unknown container kind {kind}') from e

    if kind is ContainerKind.dense:
        try:
            matrix = DenseMatrix(reader.take(_F32, M * K).reshape(M, K))
        except ValueError as e:
            raise CorruptPayload(f'invalid dense payload: {e}') from e
    elif kind is ContainerKind.mask:
        packed = np.frombuffer(reader.take_raw(-(-M * K // 8)), dtype=np.uint8)
        matrix = SparsityMask(np.unpackbits(packed, count=M * K).astype(np.bool_).reshape(M, K))
    elif kind is ContainerKind.vector_wise:
        matrix = _read_vector_core(reader, M, K, V, G)
    elif kind is ContainerKind.shfl_bw:
        row_indices = reader.take(_U32, M).astype(np.int64)
        core = _read_vector_core(reader, M, K, V, G)
        try:
            matrix = ShflBWMatrix(core=core, row_indices=row_indices)
        except ValueError as e:
            raise CorruptPayload(f'invalid row_indices: {e}') from e
    else:
        nblocks = int(reader.take(_U32, 1)[0])
        coords = reader.take(_U32, 2 * nblocks).astype(np.int64).reshape(nblocks, 2)
        blocks = reader.take(_F32, nblocks * V * V).reshape(nblocks, V, V)
        try:
            matrix = BlockWiseMatrix(rows=M, cols=K, V=V, coords=coords, blocks=blocks)
        except ValueError as e:
            raise CorruptPayload(f'invalid block-wise payload: {e}') from e
    reader.finish()
    return matrix


def write_container(matrix: AnyMatrix, path: str | os.PathLike, overwrite: bool = False) -> str:
    '''
    Writes a matrix as an SMX1 file. Raises FileExistsError when the path
    exists and overwrite is False.
    '''
    FileIO.check_file_path(path, overwrite=overwrite)
    data = encode_container(matrix)
    with open(path, 'wb') as f:
        f.write(data)
    logger.info(f'{type(matrix).__name__} {matrix.shape} saved as SMX1 container here: {path}')
    return str(path)


def read_container(path: str | os.PathLike) -> AnyMatrix:
    with open(path, 'rb') as f:
        buf = f.read()
    return decode_container(buf)

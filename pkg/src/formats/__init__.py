from src.formats.container import ContainerKind, decode_container, encode_container, read_container, write_container
from src.formats.conversions import (
    apply_mask,
    compress_blockwise,
    compress_shflbw,
    compress_vectorwise,
    decompress,
    mask_from_dense,
    permute_rows,
    shflbw_row_groups,
    shflbw_to_vectorwise,
    stitch_to_blockwise,
)
from src.formats.fileio import FileIO
from src.formats.matrices import (
    BlockWiseMatrix,
    DenseMatrix,
    ShflBWMatrix,
    SparsityMask,
    StitchedGroup,
    VectorWiseMatrix,
)
from src.formats.patterns import support_classes, validate_pattern

__all__ = [
    'BlockWiseMatrix',
    'ContainerKind',
    'DenseMatrix',
    'FileIO',
    'ShflBWMatrix',
    'SparsityMask',
    'StitchedGroup',
    'VectorWiseMatrix',
    'apply_mask',
    'compress_blockwise',
    'compress_shflbw',
    'compress_vectorwise',
    'decode_container',
    'decompress',
    'encode_container',
    'mask_from_dense',
    'permute_rows',
    'read_container',
    'shflbw_row_groups',
    'shflbw_to_vectorwise',
    'stitch_to_blockwise',
    'support_classes',
    'validate_pattern',
    'write_container',
]

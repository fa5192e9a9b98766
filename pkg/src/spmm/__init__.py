from src.spmm.conv import conv2d, conv2d_direct_oracle, conv_output_shape
from src.spmm.executor import (
    execute_tiles,
    max_relative_error,
    relative_frobenius_error,
    spmm_dense_oracle,
    spmm_execute,
    stitch_tile,
    tile_mma,
)
from src.spmm.pipeline import pipeline_simulate

__all__ = [
    'conv2d',
    'conv2d_direct_oracle',
    'conv_output_shape',
    'execute_tiles',
    'max_relative_error',
    'pipeline_simulate',
    'relative_frobenius_error',
    'spmm_dense_oracle',
    'spmm_execute',
    'stitch_tile',
    'tile_mma',
]

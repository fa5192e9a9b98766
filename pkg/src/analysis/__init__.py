from src.analysis.flexibility import flexibility_log10_gain, flexibility_log_gain
from src.analysis.hardware import BUNDLED_PROFILE_DIR, list_profiles, load_hardware_profile
from src.analysis.intensity import (
    intensity_report,
    intensity_table,
    max_reuse_bruteforce,
    max_reuse_closed_form,
    required_reuse,
    reuse_dense,
    tile_intensity,
    tile_opt_dense,
)

__all__ = [
    'BUNDLED_PROFILE_DIR',
    'flexibility_log10_gain',
    'flexibility_log_gain',
    'intensity_report',
    'intensity_table',
    'list_profiles',
    'load_hardware_profile',
    'max_reuse_bruteforce',
    'max_reuse_closed_form',
    'required_reuse',
    'reuse_dense',
    'tile_intensity',
    'tile_opt_dense',
]

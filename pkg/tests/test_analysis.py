import json
import math

import pytest

from src.analysis import (
    flexibility_log10_gain,
    flexibility_log_gain,
    intensity_report,
    intensity_table,
    list_profiles,
    load_hardware_profile,
    max_reuse_bruteforce,
    max_reuse_closed_form,
    required_reuse,
    reuse_dense,
    tile_intensity,
    tile_opt_dense,
)
from src.data_models import HardwareModel, PatternEnum
from src.exceptions import BadParams


def test_flexibility_small_cases():
    assert flexibility_log_gain(4, 2) == pytest.approx(math.log(6))
    assert flexibility_log_gain(6, 3, exact=True) == pytest.approx(math.log(20))
    assert flexibility_log_gain(8, 8) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize('M, V', [(8, 2), (12, 4), (30, 5), (64, 16)])
def test_flexibility_paths_agree(M, V):
    assert flexibility_log_gain(M, V) == pytest.approx(flexibility_log_gain(M, V, exact=True), rel=1e-10)


def _exact_partition_count(M: int, V: int) -> int:
    count, remaining = 1, M
    while remaining:
        count *= math.comb(remaining, V)
        remaining -= V
    return count


@pytest.mark.parametrize('M', range(1, 21))
def test_flexibility_matches_exact_count(M):
    for V in (v for v in range(1, M + 1) if M % v == 0):
        expected = math.log(_exact_partition_count(M, V))
        assert flexibility_log_gain(M, V) == pytest.approx(expected, abs=1e-9)
        assert flexibility_log_gain(M, V, exact=True) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize('M', [12, 16, 20, 24, 64, 512])
def test_flexibility_decreases_along_divisor_chains(M):
    divisors = [v for v in range(1, M + 1) if M % v == 0]
    for small in divisors:
        for large in divisors:
            if large > small and large % small == 0:
                assert flexibility_log_gain(M, small) > flexibility_log_gain(M, large)


def test_flexibility_large_layer():
    assert flexibility_log_gain(512, 128) == pytest.approx(700.44, abs=0.01)
    assert flexibility_log10_gain(512, 128) == pytest.approx(700.44 / math.log(10), abs=0.01)
    assert math.isfinite(flexibility_log_gain(1 << 16, 64))


def test_flexibility_rejects_non_divisor():
    with pytest.raises(BadParams):
        flexibility_log_gain(10, 4)


def test_dense_reuse():
    assert tile_opt_dense(4096) == 64
    assert reuse_dense(4096) == 32
    assert reuse_dense(4096, bytes_per_value=4) == 16


def test_tile_intensity():
    assert tile_intensity(1.0, 64, 64) == 32
    assert tile_intensity(0.25, 128, 32) == 16


@pytest.mark.parametrize('alpha, expected', [(1.0, (32.0, 64, 64)), (0.25, (16.0, 128, 32))])
def test_bruteforce_exact_optima(alpha, expected):
    assert max_reuse_bruteforce(alpha, 4096) == expected


@pytest.mark.parametrize('alpha', [0.05, 0.1, 0.3, 0.5, 0.7, 0.9])
def test_closed_form_bounds_integer_tiles(alpha):
    closed = max_reuse_closed_form(alpha, 4096)
    best, T_M, T_N = max_reuse_bruteforce(alpha, 4096)
    assert closed == pytest.approx(math.sqrt(alpha) * 32)
    assert best <= closed + 1e-9
    assert best >= 0.99 * closed
    assert T_M * T_N <= 4096


@pytest.mark.parametrize('regfile', [64, 256, 1024, 4096, 16384])
@pytest.mark.parametrize('alpha', [0.1, 0.25, 0.5, 0.75, 1.0])
def test_integer_tiles_within_rounding_slack(regfile, alpha):
    closed = max_reuse_closed_form(alpha, regfile)
    best, T_M, T_N = max_reuse_bruteforce(alpha, regfile)
    assert closed * (1 - 2 / math.sqrt(regfile)) <= best <= closed + 1e-9
    assert T_M * T_N <= regfile


def test_quarter_density_halves_dense_reuse():
    assert max_reuse_closed_form(0.25, 4096) / reuse_dense(4096) == pytest.approx(0.5, abs=1e-12)


def test_reuse_rejects_bad_alpha():
    with pytest.raises(BadParams):
        max_reuse_closed_form(0.0, 4096)
    with pytest.raises(BadParams):
        max_reuse_bruteforce(1.5, 4096)


def test_required_reuse_of_bundled_profiles():
    assert required_reuse(load_hardware_profile('reference-A100-like')) == pytest.approx(63, abs=1)
    assert required_reuse(load_hardware_profile('reference-T4-like')) == pytest.approx(50, abs=1)


def test_profile_lookup(tmp_path):
    custom = {'peak_mac_per_s': 1e12, 'llc_bandwidth_bytes_per_s': 1e11, 'bytes_per_value': 1}
    (tmp_path / 'tiny.json').write_text(json.dumps(custom))
    assert {'reference-A100-like', 'reference-T4-like', 'tiny'} <= set(list_profiles(tmp_path))
    hw = load_hardware_profile('tiny', extra_dir=tmp_path)
    assert hw.name == 'tiny'
    assert required_reuse(hw) == pytest.approx(10)
    assert load_hardware_profile(tmp_path / 'tiny.json').regfile_size == 4096
    with pytest.raises(FileNotFoundError):
        load_hardware_profile('no-such-gpu')


def test_intensity_report_by_pattern():
    dense = intensity_report('dense', 1.0)
    assert dense.ratio_to_dense == 1.0
    unstructured = intensity_report(PatternEnum.unstructured, 0.25)
    assert unstructured.reuse_flop_per_byte == pytest.approx(16)
    assert unstructured.ratio_to_dense == pytest.approx(0.5)
    wide = intensity_report('shflbw', 0.25, V=128)
    assert wide.reuse_flop_per_byte == 32
    assert wide.note is None


def test_small_vectors_are_capped():
    report = intensity_report('vw', 0.5, V=16)
    assert report.reuse_flop_per_byte == 8
    assert report.ratio_to_dense == 0.25
    assert report.note is not None
    with pytest.raises(BadParams):
        intensity_report('bw', 0.5)


def test_intensity_report_uses_hardware_regfile():
    hw = HardwareModel(peak_mac_per_s=1, llc_bandwidth_bytes_per_s=1, regfile_size=16384)
    report = intensity_report('shflbw', 0.5, V=64, hw=hw)
    assert report.tile_opt == 128
    assert report.note is not None


def test_intensity_table():
    table = intensity_table(['dense', 'unstructured', 'shflbw'], [0.25, 0.5], V=128)
    assert len(table) == 6
    assert set(table['pattern']) == {'dense', 'unstructured', 'shflbw'}
    shfl = table[table['pattern'] == 'shflbw']
    assert (shfl['ratio_to_dense'] == 1.0).all()
    assert table[table['pattern'] == 'unstructured']['V'].isna().all()

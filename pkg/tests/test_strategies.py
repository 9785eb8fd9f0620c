import io

import pytest
from hypothesis import given, settings

from nvbackup.errors import InvalidBlockSize
from nvbackup.schedule import FailureSchedule, fixed_schedule
from nvbackup.strategies import (
    BackupReport,
    DirtyBitMap,
    aliveness_profile,
    backup_report,
    dirty_bits_required,
    full_memory_backup,
    modified_address,
    modified_block,
    oracle,
    oracle_modified,
    saved_sets,
    used_address,
    verify_sufficiency,
)
from nvbackup.trace import Footprint, SyntheticProfile, footprint, gen_synthetic_trace, parse_trace

import reference
from conftest import trace_and_schedule


def parse(text):
    return parse_trace(io.StringIO(text))


ONE = FailureSchedule((100,))


def fp_span(nbytes):
    return Footprint(distinct_words=1, min_addr=0, max_addr=nbytes - 4, span_words=nbytes // 4,
                     n_load=1, n_store=0)


def test_full_memory_1000_bytes_is_two_pages():
    rep = full_memory_backup(fp_span(1000), fixed_schedule(1000, 100))
    assert set(rep.per_interval_words) == {256}
    assert rep.n_intervals == 11


def test_full_memory_exact_page():
    assert full_memory_backup(fp_span(512), ONE).per_interval_words == (128,)
    assert full_memory_backup(fp_span(516), ONE).per_interval_words == (256,)


def test_full_memory_empty():
    assert full_memory_backup(footprint(parse("")), FailureSchedule((5, 9))).per_interval_words == (0, 0)


def test_ua_and_ma_small_interval():
    t = parse("1 LD 0x10\n2 ST 0x10\n3 LD 0x14\n")
    assert used_address(t, ONE).per_interval_words == (2,)
    assert modified_address(t, ONE).per_interval_words == (1,)


def test_empty_interval_is_zero():
    t = parse("1 ST 0x10\n50 ST 0x14\n")
    s = FailureSchedule((10, 20, 60))
    for f in (used_address, modified_address, oracle, oracle_modified):
        assert f(t, s).per_interval_words[1] == 0


def test_ma_all_loads():
    t = parse("1 LD 0x10\n2 LD 0x14\n")
    assert modified_address(t, ONE).per_interval_words == (0,)


def test_silent_stores_count():
    t = parse("1 ST 0x10\n2 ST 0x10\n")
    assert modified_address(t, ONE).per_interval_words == (1,)


def test_mb_groups_block():
    t = parse("1 ST 0x0\n2 ST 0x1c\n")   # words 0 and 7
    assert modified_block(t, ONE, 8).per_interval_words == (8,)
    assert modified_block(t, ONE, 4).per_interval_words == (8,)
    assert modified_block(t, ONE, 1).per_interval_words == (2,)


@pytest.mark.parametrize("n", [0, 3, 6, 2048, -2])
def test_mb_invalid_block(n):
    with pytest.raises(InvalidBlockSize):
        modified_block(parse(""), ONE, n)


def test_om_no_stores_is_zero():
    t = parse("1 LD 0x10\n50 LD 0x10\n")
    s = FailureSchedule((10, 60))
    assert oracle(t, s).per_interval_words == (1, 0)
    assert oracle_modified(t, s).per_interval_words == (0, 0)


def test_oracle_first_access_load_is_alive():
    # untouched until interval 2, then read: alive at the ends of intervals 0 and 1
    t = parse("1 ST 0x40\n25 LD 0x10\n")
    s = FailureSchedule((10, 20, 30))
    assert oracle(t, s).per_interval_words == (1, 1, 0)


def test_oracle_last_interval_zero():
    t = gen_synthetic_trace(SyntheticProfile(3000, 100, 0.4), seed=2)
    s = fixed_schedule(t.last_cycle, 1000)
    assert oracle(t, s).per_interval_words[-1] == 0
    prof = aliveness_profile(t, s)
    assert prof.alive_fraction[-1] == 0 and prof.alive_and_modified_fraction[-1] == 0


def test_aliveness_single_interval():
    t = gen_synthetic_trace(SyntheticProfile(300, 30, 0.4), seed=2)
    prof = aliveness_profile(t, FailureSchedule((t.last_cycle,)))
    assert prof.alive_words == (0,) and prof.alive_and_modified_words == (0,)


@settings(max_examples=300)
@given(trace_and_schedule())
def test_word_strategies_match_set_oracles(ts):
    t, s = ts
    b = s.boundaries
    assert list(used_address(t, s).per_interval_words) == reference.ua_sizes(t, b)
    assert list(modified_address(t, s).per_interval_words) == reference.ma_sizes(t, b)
    for n in (1, 2, 4, 8):
        assert list(modified_block(t, s, n).per_interval_words) == reference.mb_sizes(t, b, n)


@settings(max_examples=300)
@given(trace_and_schedule())
def test_oracles_match_forward_scan(ts):
    t, s = ts
    alive = reference.alive_sets_forward(t, s.boundaries)
    om = reference.om_sets_forward(t, s.boundaries)
    assert list(oracle(t, s).per_interval_words) == [len(a) for a in alive]
    assert list(oracle_modified(t, s).per_interval_words) == [len(a) for a in om]
    assert [set(x) for x in saved_sets(t, s, "oracle")] == alive
    assert [set(x) for x in saved_sets(t, s, "om")] == om


@settings(max_examples=300)
@given(trace_and_schedule())
def test_dominance_and_fractions(ts):
    t, s = ts
    ua = used_address(t, s).per_interval_words
    ma = modified_address(t, s).per_interval_words
    orc = oracle(t, s).per_interval_words
    om = oracle_modified(t, s).per_interval_words
    prev = ma
    for n in (2, 4, 8, 16):
        mb = modified_block(t, s, n).per_interval_words
        assert all(p <= m for p, m in zip(prev, mb))
        assert all(x <= m <= n * x for x, m in zip(ma, mb))
        prev = mb
    assert all(o <= a <= m <= u for o, a, m, u in zip(om, [min(x, y) for x, y in zip(orc, ma)], ma, ua))
    assert all(o <= r for o, r in zip(om, orc))
    prof = aliveness_profile(t, s)
    assert all(0 <= f <= 1 for f in prof.alive_fraction + prof.alive_and_modified_fraction)
    assert all(am <= a for am, a in zip(prof.alive_and_modified_words, prof.alive_words))


@settings(max_examples=200)
@given(trace_and_schedule())
def test_every_strategy_is_sufficient(ts):
    t, s = ts
    for strat, n in (("full", 1), ("ua", 1), ("ma", 1), ("mb", 4), ("oracle", 1), ("om", 1)):
        assert verify_sufficiency(t, s, saved_sets(t, s, strat, n)) is None, strat


def test_saved_set_sizes_match_reports():
    t = gen_synthetic_trace(SyntheticProfile(4000, 700, 0.35, "looped"), seed=8)
    s = fixed_schedule(t.last_cycle, 900)
    for strat, n in (("full", 1), ("ua", 1), ("ma", 1), ("mb", 8), ("oracle", 1), ("om", 1)):
        sizes = tuple(len(x) for x in saved_sets(t, s, strat, n))
        assert sizes == backup_report(t, s, strat, n).per_interval_words, strat


def test_verify_detects_missing_word():
    t = parse("1 ST 0x10\n20 LD 0x10\n")
    s = FailureSchedule((10, 30))
    assert verify_sufficiency(t, s, [frozenset({0x10}), frozenset()]) is None
    cex = verify_sufficiency(t, s, [frozenset(), frozenset()])
    assert cex == (1, 0x10)


def test_dirty_bits_required():
    assert dirty_bits_required(8192, 8) == 1024
    assert dirty_bits_required(8192, 64) == 128
    assert dirty_bits_required(1, 8) == 1
    with pytest.raises(InvalidBlockSize):
        dirty_bits_required(8192, 3)


def test_dirty_bit_map():
    m = DirtyBitMap(100, 8)
    assert m.n_blocks == 13 and m.n_blocks * 8 >= 100
    m.mark(0)
    m.mark(7)
    m.mark(99)
    assert m.dirty_blocks() == [0, 12] and m.popcount() == 2
    m.clear()
    assert m.popcount() == 0


def test_report_aggregates_and_csv():
    r = BackupReport("mb", (4, 8, 0), 4)
    assert r.total_words == 12 and r.mean_words == 4.0
    assert r.total(exclude_final=True) == 12 and r.mean(exclude_final=True) == 6.0
    assert r.failure_words == 12
    lines = r.to_csv().splitlines()
    assert lines[0] == "interval,strategy,block_size,words_saved"
    assert lines[2] == "1,mb,4,8"
    with pytest.raises(ValueError):
        BackupReport("ma", (-1,))

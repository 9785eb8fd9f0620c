import io

import pytest

from nvbackup.controller import (
    BackupController,
    Phase,
    TimingParams,
    backup_time,
    exec_time,
    execution_times,
    nvp_backup_time,
    restore_time,
    run_controller,
    software_backup_time,
)
from nvbackup.errors import MemTooSmall
from nvbackup.schedule import FailureSchedule, fixed_schedule, random_schedule
from nvbackup.strategies import modified_block
from nvbackup.trace import SyntheticProfile, gen_synthetic_trace, parse_trace


def parse(text):
    return parse_trace(io.StringIO(text))


def test_words_saved_equals_modified_block():
    t = gen_synthetic_trace(SyntheticProfile(5000, 900, 0.3, "looped"), seed=4)
    s = random_schedule(t.last_cycle, 1e-3, seed=1)
    for n in (1, 8, 64):
        run = run_controller(t, s, n, 8192)
        assert run.words_saved == modified_block(t, s, n).per_interval_words


def test_no_stores_no_backup():
    t = gen_synthetic_trace(SyntheticProfile(500, 64, 0.0), seed=1)
    s = fixed_schedule(t.last_cycle, 100)
    run = run_controller(t, s, 8, 8192)
    assert sum(run.backup_cycles) == 0
    assert run.restore_cycles[:-1] == (8192,) * (s.n_intervals - 1)
    assert run.restore_cycles[-1] == 0


def test_mem_too_small():
    t = parse("1 ST 0x0\n2 ST 0x100\n")
    with pytest.raises(MemTooSmall):
        run_controller(t, FailureSchedule((5,)), 8, 32)
    assert run_controller(t, FailureSchedule((5,)), 8, 65).words_saved == (16,)


def test_check_loads_passes():
    t = gen_synthetic_trace(SyntheticProfile(3000, 300, 0.4, "uniform"), seed=6)
    s = random_schedule(t.last_cycle, 2e-3, seed=2)
    run = run_controller(t, s, 8, 4096, check_loads=True)
    assert run.counterexample is None


def test_fsm_rejects_access_during_off():
    c = BackupController(64, 8)
    c.access(3, True)
    assert c.power_fail() == 8
    assert c.state.phase is Phase.OFF
    with pytest.raises(RuntimeError):
        c.access(3, False)
    assert c.restore() == 64
    assert c.state.phase is Phase.EXECUTE


def test_invalid_op_does_not_set_dirty_bit():
    c = BackupController(64, 8)
    c.access(3, True, op_valid=False)
    assert c.power_fail() == 0


def test_backup_times():
    assert backup_time(8192) == pytest.approx(1.024e-3)
    assert backup_time(1024) == pytest.approx(0.128e-3)
    assert backup_time(0) == 0
    assert restore_time(8192) == pytest.approx(1.024e-3)
    assert software_backup_time(10, TimingParams(k_sw=2)) == pytest.approx(2 * backup_time(10))
    with pytest.raises(ValueError):
        backup_time(-1)


def test_nvp_times():
    assert nvp_backup_time(4096) == pytest.approx(1.02e-3)
    assert nvp_backup_time(1025) == pytest.approx(0.51e-3)
    assert nvp_backup_time(0) == 0


def test_exec_time():
    assert exec_time(1, 10, 1e-3, 1e-3, 0.1) == pytest.approx(2.02)
    assert exec_time(1, 0, 5, 5, 5) == 1
    assert exec_time(1, 3, 1e-3, 0, 0) < exec_time(1, 3, 2e-3, 0, 0)
    with pytest.raises(ValueError):
        exec_time(1, -1, 0, 0, 0)


def test_nvm_slowdown():
    assert TimingParams().nvm_slowdown == pytest.approx(3.0)


def _reductions(profile, n_prog, seed=0):
    t = gen_synthetic_trace(profile, seed=seed)
    s = fixed_schedule(t.last_cycle, n_prog)
    words = modified_block(t, s, 8).per_interval_words
    times = execution_times(t, s, words)
    return times.reduction(times.hw), times.reduction(times.nvm_only)


def test_nvm_only_sign_pattern():
    # compute bound, small data: running from NVM is a net loss
    fz, nvm = _reductions(SyntheticProfile(200_000, 64, 0.2, "looped", loop_window_words=16), 100_000)
    assert fz > 0 and nvm < 0
    # large data section: paged software backups dominate and NVM-only wins
    fz, nvm = _reductions(SyntheticProfile(200_000, 16384, 0.3, "uniform"), 100_000)
    assert fz > 0 and nvm > 0


def test_hw_beats_software_baseline():
    t = gen_synthetic_trace(SyntheticProfile(20_000, 2000, 0.3, "looped"), seed=3)
    s = fixed_schedule(t.last_cycle, 5000)
    times = execution_times(t, s, modified_block(t, s, 8).per_interval_words)
    assert times.t_prog < times.hw < times.paged_sw
    assert times.n_i == s.n_failures

"""Behavioural model of the hardware backup controller and the timing models.

The controller spies on CPU stores during execution, sets one dirty bit per
block, copies dirty blocks word by word to NVM on a power failure and
reloads the whole SRAM from NVM on restore.  One word moves per NVM cycle.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import MemTooSmall
from .schedule import FailureSchedule
from .strategies import CounterexampleAt, DirtyBitMap, data_section_words
from .trace import WORD_BYTES, Trace, footprint

CPU_HZ = 24e6
NVM_PERIOD = 125e-9
NVP_SECONDS_PER_4KB = 1.02e-3
NVP_PAGE_BYTES = 1024
DEFAULT_K_SW = 13.0


class Phase(enum.Enum):
    EXECUTE = "execute"
    BACKUP = "backup"
    RESTORE = "restore"
    OFF = "off"


@dataclass(frozen=True)
class TimingParams:
    cpu_period: float = 1.0 / CPU_HZ
    nvm_period: float = NVM_PERIOD
    t_off_avg: float | None = None   # None: equal to the active time of one interval
    k_sw: float = DEFAULT_K_SW       # software per-word slowdown of the paged baseline

    def __post_init__(self):
        if self.cpu_period <= 0 or self.nvm_period <= 0:
            raise ValueError("clock periods must be positive")
        if self.k_sw <= 0:
            raise ValueError("k_sw must be positive")

    @property
    def nvm_slowdown(self) -> float:
        """CPU slowdown when running directly from NVM (24 MHz vs 8 MHz -> 3)."""
        return self.nvm_period / self.cpu_period


@dataclass
class ControllerState:
    phase: Phase
    dirty: DirtyBitMap
    backup_cursor: tuple[int, int] = (0, 0)


@dataclass
class BackupController:
    """Cycle-level state machine with an optional data path.

    ``sram`` and ``nvm`` are word-offset -> value maps relative to
    ``base_word``; they are only maintained when ``track_data`` is set.
    """

    mem_words: int
    block_size_words: int
    base_word: int = 0
    track_data: bool = False
    sram: dict = field(default_factory=dict)
    nvm: dict = field(default_factory=dict)

    def __post_init__(self):
        self.state = ControllerState(Phase.EXECUTE, DirtyBitMap(self.mem_words, self.block_size_words))

    def access(self, word: int, is_store: bool, op_valid: bool = True, value=None) -> None:
        st = self.state
        if st.phase is not Phase.EXECUTE:
            raise RuntimeError(f"CPU access while controller is in {st.phase.value}")
        off = word - self.base_word
        if not 0 <= off < self.mem_words:
            raise MemTooSmall(f"word {word:#x} outside SRAM of {self.mem_words} words")
        if is_store and op_valid:
            st.dirty.mark(off)
            if self.track_data:
                self.sram[off] = value

    def read(self, word: int):
        return self.sram.get(word - self.base_word, 0)

    def power_fail(self) -> int:
        """Run the backup phase; returns the number of cycles (= words copied)."""
        st = self.state
        st.phase = Phase.BACKUP
        n = st.dirty.block_size_words
        cycles = 0
        for b in range(st.dirty.n_blocks):
            if not st.dirty.bits[b]:
                continue
            for a in range(n):
                st.backup_cursor = (b, a)
                addr = (b << st.dirty.shift) | a
                if self.track_data:
                    if addr in self.sram:
                        self.nvm[addr] = self.sram[addr]
                    else:
                        self.nvm.pop(addr, None)
                cycles += 1
        st.dirty.clear()
        st.backup_cursor = (0, 0)
        st.phase = Phase.OFF
        self.sram = {}
        return cycles

    def restore(self) -> int:
        """Reload the whole SRAM from NVM; returns the cycle count."""
        st = self.state
        st.phase = Phase.RESTORE
        if self.track_data:
            self.sram = dict(self.nvm)
        st.phase = Phase.EXECUTE
        return self.mem_words


@dataclass(frozen=True)
class ControllerRun:
    words_saved: tuple[int, ...]
    backup_cycles: tuple[int, ...]
    restore_cycles: tuple[int, ...]
    base_word: int
    counterexample: CounterexampleAt | None = None


def run_controller(
    trace: Trace,
    schedule: FailureSchedule,
    block_size_words: int,
    mem_words: int,
    base_word: int | None = None,
    check_loads: bool = False,
) -> ControllerRun:
    """Drive the controller with every trace event.

    SRAM starts at ``base_word`` (default: lowest word touched, rounded down
    to a block boundary).  The last interval is reported as if a failure
    ended it, so ``words_saved`` lines up with the strategy reports; its
    restore count is 0 because execution never resumes.

    With ``check_loads`` the data path is simulated too: every store writes
    a fresh version and each load is compared against an uninterrupted
    run.  The first mismatch is returned as ``counterexample``.
    """
    fp = footprint(trace)
    if base_word is None:
        base_word = ((fp.min_addr >> 2) // block_size_words) * block_size_words
    if len(trace) and (fp.max_addr >> 2) - base_word + 1 > mem_words:
        raise MemTooSmall(
            f"trace spans {(fp.max_addr >> 2) - base_word + 1} words, SRAM has {mem_words}"
        )
    ctrl = BackupController(mem_words, block_size_words, base_word, track_data=check_loads)
    iv = schedule.assign(trace.cycles).tolist()
    saved, restore = [], []
    n = schedule.n_intervals
    reference: dict[int, int] = {}
    version = 0
    bad = None

    def close_interval():
        words = ctrl.power_fail()
        saved.append(words)
        restore.append(0 if len(saved) == n else ctrl.restore())

    for i, w, st in zip(iv, trace.words.tolist(), trace.is_store.tolist()):
        while len(saved) < i:
            close_interval()
        if check_loads:
            if st:
                version += 1
                reference[w] = version
            elif bad is None and ctrl.read(w) != reference.get(w, 0):
                bad = CounterexampleAt(i, w * WORD_BYTES)
        ctrl.access(w, st, value=version)
    while len(saved) < n:
        close_interval()
    return ControllerRun(tuple(saved), tuple(saved), tuple(restore), base_word, bad)


# -- timing ------------------------------------------------------------------

def backup_time(words: int, timing: TimingParams = TimingParams()) -> float:
    if words < 0:
        raise ValueError("word count must be >= 0")
    return words * timing.nvm_period


def restore_time(words: int, timing: TimingParams = TimingParams()) -> float:
    if words < 0:
        raise ValueError("word count must be >= 0")
    return words * timing.nvm_period


def software_backup_time(words: int, timing: TimingParams = TimingParams()) -> float:
    """Software copy loop of the paged baseline: ``k_sw`` times slower per word."""
    return backup_time(words, timing) * timing.k_sw


def nvp_backup_time(used_bytes: int) -> float:
    """Non-volatile processor backup: 1.02 ms per 4 KB, in 1 KB pages."""
    if used_bytes < 0:
        raise ValueError("used_bytes must be >= 0")
    pages = -(-used_bytes // NVP_PAGE_BYTES)
    return pages * NVP_SECONDS_PER_4KB / 4


def exec_time(t_prog: float, n_i: int, t_s: float, t_r: float, t_off_avg: float) -> float:
    """Total execution time of a program interrupted ``n_i`` times."""
    if min(t_prog, n_i, t_s, t_r, t_off_avg) < 0:
        raise ValueError("exec_time inputs must be >= 0")
    return t_prog + n_i * (t_s + t_r + t_off_avg)


@dataclass(frozen=True)
class ExecTimes:
    t_prog: float
    hw: float
    paged_sw: float
    nvm_only: float
    n_i: int

    def reduction(self, t: float) -> float:
        """Percentage reduction of ``t`` with respect to the paged software baseline."""
        return 100.0 * (1.0 - t / self.paged_sw)


def execution_times(
    trace: Trace,
    schedule: FailureSchedule,
    per_interval_words,
    timing: TimingParams = TimingParams(),
    mem_words: int | None = None,
    nvm_only_off_time: bool = False,
) -> ExecTimes:
    """Execution time of a hardware-backup run, the paged software baseline and NVM-only.

    ``per_interval_words`` is the hardware strategy's backup size per
    interval.  Restores copy ``mem_words`` words (default: the paged data
    section).  The NVM-only system runs ``nvm_slowdown`` times longer and,
    unless ``nvm_only_off_time`` is set, pays no off time either.
    """
    fp = footprint(trace)
    section = data_section_words(fp)
    if mem_words is None:
        mem_words = section
    lengths = schedule.interval_lengths()
    active = lengths[:-1] or lengths
    t_a = sum(active) / len(active) * timing.cpu_period
    t_off = t_a if timing.t_off_avg is None else timing.t_off_avg
    t_prog = (trace.last_cycle + 1) * timing.cpu_period if len(trace) else 0.0
    n_i = schedule.n_failures

    t_r = restore_time(mem_words, timing)
    backups = sum(per_interval_words[: n_i])
    hw = t_prog + backup_time(backups, timing) + n_i * (t_r + t_off)

    sw_s = software_backup_time(section, timing)
    sw_r = restore_time(section, timing) * timing.k_sw
    paged_sw = exec_time(t_prog, n_i, sw_s, sw_r, t_off)

    t_nvm = t_prog * timing.nvm_slowdown
    if nvm_only_off_time and t_a > 0:
        n_nvm = max(math.ceil(t_nvm / t_a - 1e-9) - 1, 0)
        nvm_only = exec_time(t_nvm, n_nvm, 0.0, 0.0, t_off)
    else:
        nvm_only = exec_time(t_nvm, 0, 0.0, 0.0, 0.0)
    return ExecTimes(t_prog, hw, paged_sw, nvm_only, n_i)

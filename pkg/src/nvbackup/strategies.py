"""Backup-size strategies evaluated over a segmented trace.

Every strategy returns a :class:`BackupReport` holding the number of 32-bit
words it would copy to NVM at the end of each interval.  The ``*_sets``
helpers return the actual address sets, which :func:`verify_sufficiency`
replays to prove a policy never loses live data.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidBlockSize
from .schedule import FailureSchedule
from .trace import WORD_BYTES, Footprint, Trace, footprint

PAGE_BYTES = 512
PAGE_WORDS = PAGE_BYTES // WORD_BYTES
MAX_BLOCK_WORDS = 1024

STRATEGIES = ("full", "ua", "ma", "mb", "oracle", "om")


@dataclass(frozen=True)
class BackupReport:
    strategy_id: str
    per_interval_words: tuple[int, ...]
    block_size_words: int = 1

    def __post_init__(self):
        words = tuple(int(w) for w in self.per_interval_words)
        if any(w < 0 for w in words):
            raise ValueError("backup sizes cannot be negative")
        object.__setattr__(self, "per_interval_words", words)

    @property
    def label(self) -> str:
        if self.strategy_id == "mb":
            return f"mb{self.block_size_words}"
        return self.strategy_id

    @property
    def n_intervals(self) -> int:
        return len(self.per_interval_words)

    def total(self, exclude_final: bool = False) -> int:
        words = self.per_interval_words[:-1] if exclude_final else self.per_interval_words
        return sum(words)

    def mean(self, exclude_final: bool = False) -> float:
        words = self.per_interval_words[:-1] if exclude_final else self.per_interval_words
        return sum(words) / len(words) if words else 0.0

    @property
    def total_words(self) -> int:
        return self.total()

    @property
    def mean_words(self) -> float:
        return self.mean()

    @property
    def failure_words(self) -> int:
        """Words actually written to NVM: every interval but the last ends in a failure."""
        return self.total(exclude_final=True)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["interval", "strategy", "block_size", "words_saved"])
        for i, n in enumerate(self.per_interval_words):
            w.writerow([i, self.strategy_id, self.block_size_words, n])
        return out.getvalue()


def _check_block_size(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or n < 1 or n > MAX_BLOCK_WORDS or n & (n - 1):
        raise InvalidBlockSize(f"block size must be a power of two in [1, {MAX_BLOCK_WORDS}], got {n}")
    return int(n).bit_length() - 1


class DirtyBitMap:
    """One flag per ``block_size_words``-word block of a memory region."""

    def __init__(self, mem_words: int, block_size_words: int):
        self.shift = _check_block_size(block_size_words)
        self.block_size_words = int(block_size_words)
        self.mem_words = int(mem_words)
        self.n_blocks = dirty_bits_required(mem_words, block_size_words)
        self.bits = bytearray(self.n_blocks)

    def mark(self, word_offset: int) -> None:
        self.bits[word_offset >> self.shift] = 1

    def clear(self) -> None:
        self.bits = bytearray(self.n_blocks)

    def dirty_blocks(self) -> list[int]:
        return [b for b, f in enumerate(self.bits) if f]

    def popcount(self) -> int:
        return sum(self.bits)

    def __repr__(self):
        return f"DirtyBitMap(n_blocks={self.n_blocks}, N={self.block_size_words}, dirty={self.popcount()})"


def dirty_bits_required(mem_words: int, block_size_words: int) -> int:
    _check_block_size(block_size_words)
    return -(-int(mem_words) // int(block_size_words))


# -- word-granular strategies ------------------------------------------------

def _distinct_per_interval(iv: np.ndarray, keys: np.ndarray, n: int) -> np.ndarray:
    if len(keys) == 0:
        return np.zeros(n, dtype=np.int64)
    kmin = int(keys.min())
    width = int(keys.max()) - kmin + 1
    pairs = np.unique(iv.astype(np.int64) * width + (keys - kmin))
    return np.bincount(pairs // width, minlength=n).astype(np.int64)


def full_memory_backup(fp: Footprint, schedule: FailureSchedule) -> BackupReport:
    """Paged data section: ``ceil(span / 512 B)`` pages in every interval."""
    words = data_section_words(fp)
    return BackupReport("full", (words,) * schedule.n_intervals)


def data_section_words(fp: Footprint) -> int:
    if fp.distinct_words == 0:
        return 0
    pages = -(-fp.span_bytes // PAGE_BYTES)
    return pages * PAGE_WORDS


def used_address(trace: Trace, schedule: FailureSchedule) -> BackupReport:
    iv = schedule.assign(trace.cycles)
    return BackupReport("ua", tuple(_distinct_per_interval(iv, trace.words, schedule.n_intervals)))


def modified_address(trace: Trace, schedule: FailureSchedule) -> BackupReport:
    iv = schedule.assign(trace.cycles)
    st = trace.is_store
    counts = _distinct_per_interval(iv[st], trace.words[st], schedule.n_intervals)
    return BackupReport("ma", tuple(counts))


def modified_block(trace: Trace, schedule: FailureSchedule, block_size_words: int) -> BackupReport:
    """``N`` words per distinct ``N``-word block written in the interval.

    Blocks are aligned on multiples of ``N`` words, which equals indexing
    from the footprint base rounded down to a block boundary.
    """
    shift = _check_block_size(block_size_words)
    iv = schedule.assign(trace.cycles)
    st = trace.is_store
    blocks = _distinct_per_interval(iv[st], trace.words[st] >> shift, schedule.n_intervals)
    return BackupReport("mb", tuple(blocks * block_size_words), block_size_words)


# -- oracles -----------------------------------------------------------------

class _WordHistory(NamedTuple):
    """Events regrouped per word, chronological inside each word."""
    words: np.ndarray
    iv: np.ndarray
    store: np.ndarray
    same_next: np.ndarray   # event k+1 touches the same word as event k


def _word_history(trace: Trace, schedule: FailureSchedule) -> _WordHistory:
    iv = schedule.assign(trace.cycles)
    order = np.argsort(trace.words, kind="stable")
    w = trace.words[order]
    same_next = np.zeros(len(w), dtype=bool)
    same_next[:-1] = w[1:] == w[:-1]
    return _WordHistory(w, iv[order], trace.is_store[order], same_next)


def _alive_ranges(h: _WordHistory):
    """Half-open interval ranges ``[lo, hi)`` at whose end a word is alive.

    A word is alive at the end of interval ``i`` when its first access after
    that boundary is a load.  Between two consecutive accesses ``a -> b`` of
    the same word lying in different intervals, that holds for the ends of
    intervals ``iv(a) .. iv(b)-1`` exactly when ``b`` is a load.  Before the
    first access, it holds iff that first access is a load.
    """
    n = len(h.words)
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    nxt_iv = np.empty(n, dtype=np.int64)
    nxt_iv[:-1] = h.iv[1:]
    nxt_iv[-1] = -1
    nxt_load = np.zeros(n, dtype=bool)
    nxt_load[:-1] = ~h.store[1:]
    cross = h.same_next & (nxt_iv > h.iv) & nxt_load
    idx = np.flatnonzero(cross)
    lo = h.iv[idx]
    hi = nxt_iv[idx]
    words = h.words[idx]

    first = np.ones(n, dtype=bool)
    first[1:] = ~h.same_next[:-1]
    first_load = np.flatnonzero(first & ~h.store & (h.iv > 0))
    lo = np.concatenate([lo, np.zeros(len(first_load), dtype=np.int64)])
    hi = np.concatenate([hi, h.iv[first_load]])
    words = np.concatenate([words, h.words[first_load]])
    return lo, hi, words


def _count_ranges(lo, hi, n) -> np.ndarray:
    diff = np.zeros(n + 1, dtype=np.int64)
    np.add.at(diff, lo, 1)
    np.add.at(diff, hi, -1)
    return np.cumsum(diff[:-1])


def _alive_modified(h: _WordHistory):
    """(interval, word) pairs: written in the interval and alive at its end."""
    n = len(h.words)
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    # last access of each (word, interval) group
    group_end = ~h.same_next.copy()
    group_end[:-1] |= h.iv[1:] != h.iv[:-1]
    starts = np.flatnonzero(np.concatenate([[True], group_end[:-1]]))
    has_store = np.maximum.reduceat(h.store.astype(np.int8), starts).astype(bool)
    ends = np.flatnonzero(group_end)
    nxt_load = np.zeros(n, dtype=bool)
    nxt_load[:-1] = h.same_next[:-1] & ~h.store[1:]
    keep = has_store & nxt_load[ends]
    # the next access of a group end is in a later interval by construction
    sel = ends[keep]
    return h.iv[sel], h.words[sel]


def oracle(trace: Trace, schedule: FailureSchedule) -> BackupReport:
    """Words whose next access after the interval is a load."""
    h = _word_history(trace, schedule)
    lo, hi, _ = _alive_ranges(h)
    return BackupReport("oracle", tuple(_count_ranges(lo, hi, schedule.n_intervals)))


def oracle_modified(trace: Trace, schedule: FailureSchedule) -> BackupReport:
    """Alive words that were also written during the interval."""
    h = _word_history(trace, schedule)
    ivs, _ = _alive_modified(h)
    return BackupReport("om", tuple(np.bincount(ivs, minlength=schedule.n_intervals)))


@dataclass(frozen=True)
class AlivenessProfile:
    alive_words: tuple[int, ...]
    alive_and_modified_words: tuple[int, ...]
    total_words: int

    @property
    def alive_fraction(self) -> tuple[float, ...]:
        return tuple(a / self.total_words if self.total_words else 0.0 for a in self.alive_words)

    @property
    def alive_and_modified_fraction(self) -> tuple[float, ...]:
        return tuple(
            a / self.total_words if self.total_words else 0.0 for a in self.alive_and_modified_words
        )


def aliveness_profile(trace: Trace, schedule: FailureSchedule) -> AlivenessProfile:
    """Alive and alive-and-modified counts relative to the distinct words addressed."""
    return AlivenessProfile(
        oracle(trace, schedule).per_interval_words,
        oracle_modified(trace, schedule).per_interval_words,
        footprint(trace).distinct_words,
    )


# -- saved address sets ------------------------------------------------------

def _sets_from_pairs(ivs, words, n) -> list[frozenset[int]]:
    buckets: list[set[int]] = [set() for _ in range(n)]
    for i, w in zip(ivs.tolist(), words.tolist()):
        buckets[i].add(w * WORD_BYTES)
    return [frozenset(b) for b in buckets]


def saved_sets(
    trace: Trace, schedule: FailureSchedule, strategy: str, block_size_words: int = 1
) -> list[frozenset[int]]:
    """Byte addresses each strategy copies to NVM at the end of every interval."""
    n = schedule.n_intervals
    if strategy == "full":
        fp = footprint(trace)
        words = data_section_words(fp)
        base = fp.min_addr
        region = frozenset(range(base, base + words * WORD_BYTES, WORD_BYTES))
        return [region] * n
    if strategy == "oracle":
        h = _word_history(trace, schedule)
        lo, hi, words = _alive_ranges(h)
        buckets: list[set[int]] = [set() for _ in range(n)]
        for a, b, w in zip(lo.tolist(), hi.tolist(), words.tolist()):
            for i in range(a, b):
                buckets[i].add(w * WORD_BYTES)
        return [frozenset(b) for b in buckets]
    if strategy == "om":
        ivs, words = _alive_modified(_word_history(trace, schedule))
        return _sets_from_pairs(ivs, words, n)
    iv = schedule.assign(trace.cycles)
    if strategy == "ua":
        return _sets_from_pairs(iv, trace.words, n)
    if strategy == "ma":
        st = trace.is_store
        return _sets_from_pairs(iv[st], trace.words[st], n)
    if strategy == "mb":
        shift = _check_block_size(block_size_words)
        st = trace.is_store
        out: list[set[int]] = [set() for _ in range(n)]
        for i, b in set(zip(iv[st].tolist(), (trace.words[st] >> shift).tolist())):
            base = (b << shift) * WORD_BYTES
            out[i].update(range(base, base + block_size_words * WORD_BYTES, WORD_BYTES))
        return [frozenset(s) for s in out]
    raise ValueError(f"unknown strategy {strategy!r}")


def backup_report(
    trace: Trace, schedule: FailureSchedule, strategy: str, block_size_words: int = 1
) -> BackupReport:
    if strategy == "full":
        return full_memory_backup(footprint(trace), schedule)
    if strategy == "mb":
        return modified_block(trace, schedule, block_size_words)
    funcs = {"ua": used_address, "ma": modified_address, "oracle": oracle, "om": oracle_modified}
    try:
        return funcs[strategy](trace, schedule)
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None


# -- replay oracle -----------------------------------------------------------

class CounterexampleAt(NamedTuple):
    interval: int
    addr: int


def verify_sufficiency(
    trace: Trace, schedule: FailureSchedule, per_interval_saved_sets: Sequence[frozenset[int]]
) -> CounterexampleAt | None:
    """Replay ``trace`` with backups and full restores at every failure.

    Each store writes a fresh version number; memory starts at version 0 in
    both SRAM and NVM.  At a failure the saved addresses are copied to NVM
    and SRAM is reloaded from NVM entirely.  Returns ``None`` if every load
    sees the version the uninterrupted run would see, otherwise the first
    offending load's interval and byte address.
    """
    if len(per_interval_saved_sets) < schedule.n_failures:
        raise ValueError("need one saved set per interval ending in a failure")
    iv = schedule.assign(trace.cycles).tolist()
    reference: dict[int, int] = {}
    sram: dict[int, int] = {}
    nvm: dict[int, int] = {}
    current = 0
    version = 0
    for i, addr, st in zip(iv, trace.addrs.tolist(), trace.is_store.tolist()):
        while current < i:
            for a in per_interval_saved_sets[current]:
                nvm[a] = sram.get(a, 0)
            sram = dict(nvm)
            current += 1
        if st:
            version += 1
            sram[addr] = version
            reference[addr] = version
        elif sram.get(addr, 0) != reference.get(addr, 0):
            return CounterexampleAt(i, addr)
    return None

"""Write-back cache in front of an NVM main memory.

4-way set-associative, 8-word (32-byte) lines, LRU replacement,
write-allocate.  Every power failure scans all lines, writes the dirty ones
back and leaves the cache cold.
"""
from __future__ import annotations

import csv
import io
import json
from collections import OrderedDict
from dataclasses import asdict, dataclass

from .errors import InvalidCacheConfig
from .schedule import FailureSchedule
from .trace import WORD_BYTES, Trace

CACHE_SIZES = (2048, 4096, 8192, 16384)


@dataclass(frozen=True)
class CacheConfig:
    size_bytes: int = 4096
    ways: int = 4
    line_words: int = 8
    replacement: str = "lru"

    def __post_init__(self):
        if self.size_bytes not in CACHE_SIZES:
            raise InvalidCacheConfig(f"cache size must be one of {CACHE_SIZES}, got {self.size_bytes}")
        if self.ways != 4 or self.line_words != 8:
            raise InvalidCacheConfig("only 4-way caches with 8-word lines are modelled")
        if self.replacement != "lru":
            raise InvalidCacheConfig("only LRU replacement is modelled")
        if self.size_bytes % (self.ways * self.line_bytes):
            raise InvalidCacheConfig("size must be a multiple of ways * line size")

    @property
    def line_bytes(self) -> int:
        return self.line_words * WORD_BYTES

    @property
    def n_lines(self) -> int:
        return self.size_bytes // self.line_bytes

    @property
    def n_sets(self) -> int:
        return self.size_bytes // (self.ways * self.line_bytes)


@dataclass(frozen=True)
class CacheStats:
    n_hit_r: int = 0
    n_hit_w: int = 0
    n_miss: int = 0
    n_evict_words: int = 0
    n_flush_lines: int = 0
    n_lines_scanned: int = 0

    @property
    def n_accesses(self) -> int:
        return self.n_hit_r + self.n_hit_w + self.n_miss

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.DictWriter(out, fieldnames=list(asdict(self)), lineterminator="\n")
        w.writeheader()
        w.writerow(asdict(self))
        return out.getvalue()


def simulate_cache(trace: Trace, schedule: FailureSchedule, config: CacheConfig) -> CacheStats:
    line_shift = (config.line_bytes - 1).bit_length()
    n_sets = config.n_sets
    ways = config.ways
    # per set: line address -> dirty flag, ordered from LRU to MRU
    sets: list[OrderedDict] = [OrderedDict() for _ in range(n_sets)]
    hit_r = hit_w = miss = evict = flush = scanned = 0
    current = 0
    iv = schedule.assign(trace.cycles).tolist()
    for i, addr, st in zip(iv, trace.addrs.tolist(), trace.is_store.tolist()):
        while current < i:
            scanned += config.n_lines
            for s in sets:
                flush += sum(s.values())
            sets = [OrderedDict() for _ in range(n_sets)]
            current += 1
        line = addr >> line_shift
        s = sets[line % n_sets]
        if line in s:
            s.move_to_end(line)
            if st:
                hit_w += 1
                s[line] = True
            else:
                hit_r += 1
            continue
        miss += 1
        if len(s) >= ways:
            _, dirty = s.popitem(last=False)
            if dirty:
                evict += config.line_words
        s[line] = bool(st)
    # failures after the last access still flush and scan
    while current < schedule.n_failures:
        scanned += config.n_lines
        for s in sets:
            flush += sum(s.values())
        sets = [OrderedDict() for _ in range(n_sets)]
        current += 1
    return CacheStats(hit_r, hit_w, miss, evict, flush, scanned)

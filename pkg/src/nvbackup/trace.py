"""Memory-access traces: data model, text I/O, footprints and synthesis.

A trace file holds one access per line::

    # comment
    90 ST 0x38aaad4
    97 LD 0x2ba50

Addresses are byte addresses of 32-bit word accesses.  Files ending in
``.gz`` are read and written through gzip.
"""
from __future__ import annotations

import enum
import gzip
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

from .errors import MalformedLine, MisalignedAddress, NonMonotonicCycle, TraceIOError

WORD_BYTES = 4


class Kind(enum.Enum):
    LOAD = "LD"
    STORE = "ST"


class TraceEvent(NamedTuple):
    cycle: int
    kind: Kind
    addr: int

    @property
    def word(self) -> int:
        return self.addr >> 2

    @property
    def is_store(self) -> bool:
        return self.kind is Kind.STORE


class Trace:
    """Immutable, column-oriented sequence of :class:`TraceEvent`.

    Columns are exposed as read-only numpy arrays (``cycles``, ``addrs``,
    ``is_store``) so the strategy code can work vectorised on traces with
    tens of millions of events.
    """

    __slots__ = ("cycles", "addrs", "is_store")

    def __init__(self, cycles, addrs, is_store):
        cycles = np.ascontiguousarray(cycles, dtype=np.int64)
        addrs = np.ascontiguousarray(addrs, dtype=np.int64)
        is_store = np.ascontiguousarray(is_store, dtype=bool)
        if not (len(cycles) == len(addrs) == len(is_store)):
            raise ValueError("trace columns must have equal length")
        if len(cycles) and np.any(np.diff(cycles) < 0):
            bad = int(np.argmax(np.diff(cycles) < 0)) + 1
            raise NonMonotonicCycle(bad + 1, int(cycles[bad]), int(cycles[bad - 1]))
        if len(addrs) and np.any(addrs % WORD_BYTES):
            bad = int(np.argmax(addrs % WORD_BYTES != 0))
            raise MisalignedAddress(bad + 1, int(addrs[bad]))
        for arr in (cycles, addrs, is_store):
            arr.flags.writeable = False
        object.__setattr__(self, "cycles", cycles)
        object.__setattr__(self, "addrs", addrs)
        object.__setattr__(self, "is_store", is_store)

    def __setattr__(self, name, value):
        raise AttributeError("Trace is immutable")

    @classmethod
    def from_events(cls, events: Iterable[TraceEvent]) -> "Trace":
        events = list(events)
        return cls(
            [e.cycle for e in events],
            [e.addr for e in events],
            [e.kind is Kind.STORE for e in events],
        )

    @property
    def words(self) -> np.ndarray:
        return self.addrs >> 2

    @property
    def last_cycle(self) -> int:
        return int(self.cycles[-1]) if len(self.cycles) else 0

    @property
    def events(self) -> tuple[TraceEvent, ...]:
        return tuple(self)

    def __len__(self):
        return len(self.cycles)

    def __iter__(self) -> Iterator[TraceEvent]:
        for c, a, s in zip(self.cycles.tolist(), self.addrs.tolist(), self.is_store.tolist()):
            yield TraceEvent(c, Kind.STORE if s else Kind.LOAD, a)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Trace(self.cycles[idx], self.addrs[idx], self.is_store[idx])
        return TraceEvent(
            int(self.cycles[idx]),
            Kind.STORE if self.is_store[idx] else Kind.LOAD,
            int(self.addrs[idx]),
        )

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            np.array_equal(self.cycles, other.cycles)
            and np.array_equal(self.addrs, other.addrs)
            and np.array_equal(self.is_store, other.is_store)
        )

    def __hash__(self):
        return hash((self.cycles.tobytes(), self.addrs.tobytes(), self.is_store.tobytes()))

    def __repr__(self):
        return f"Trace(n_events={len(self)}, last_cycle={self.last_cycle})"


@dataclass(frozen=True)
class Footprint:
    distinct_words: int
    min_addr: int
    max_addr: int
    span_words: int
    n_load: int
    n_store: int

    @property
    def span_bytes(self) -> int:
        return self.span_words * WORD_BYTES


# -- parsing -----------------------------------------------------------------

_OPS = {"LD": False, "ST": True}


def _parse_fields(fields, lineno, raw):
    if len(fields) == 4:
        # optional leading interval column; derived, so dropped
        fields = fields[1:]
    if len(fields) != 3:
        raise MalformedLine(lineno, raw, f"expected 3 fields, got {len(fields)}")
    cyc_s, op_s, addr_s = fields
    op = _OPS.get(op_s.upper())
    if op is None:
        raise MalformedLine(lineno, raw, f"unknown op {op_s!r}")
    try:
        cycle = int(cyc_s, 10)
        addr = int(addr_s, 16)
    except ValueError:
        raise MalformedLine(lineno, raw, "bad number") from None
    if cycle < 0 or addr < 0:
        raise MalformedLine(lineno, raw, "negative value")
    return cycle, op, addr


def parse_trace(stream: TextIO | Iterable[str]) -> Trace:
    """Parse a text trace; events are kept in file order."""
    cycles: list[int] = []
    addrs: list[int] = []
    stores: list[bool] = []
    prev = -1
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cycle, op, addr = _parse_fields(line.split(), lineno, raw.rstrip("\n"))
        if cycle < prev:
            raise NonMonotonicCycle(lineno, cycle, prev)
        if addr % WORD_BYTES:
            raise MisalignedAddress(lineno, addr)
        prev = cycle
        cycles.append(cycle)
        addrs.append(addr)
        stores.append(op)
    return Trace(cycles, addrs, stores)


def serialize_trace(trace: Trace, stream: TextIO | None = None) -> str | None:
    """Write ``trace`` in the text format; returns a string if no stream given."""
    out = stream if stream is not None else io.StringIO()
    for c, a, s in zip(trace.cycles.tolist(), trace.addrs.tolist(), trace.is_store.tolist()):
        out.write(f"{c} {'ST' if s else 'LD'} {a:#x}\n")
    if stream is None:
        return out.getvalue()
    return None


def _open_text(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="ascii")
    return open(path, mode, encoding="ascii")


def load_trace(path) -> Trace:
    try:
        with _open_text(path, "r") as fh:
            return parse_trace(fh)
    except (OSError, UnicodeDecodeError, EOFError) as exc:
        raise TraceIOError(f"cannot read trace {path}: {exc}") from exc


def save_trace(trace: Trace, path) -> None:
    with _open_text(path, "w") as fh:
        serialize_trace(trace, fh)


# -- statistics --------------------------------------------------------------

def footprint(trace: Trace) -> Footprint:
    n = len(trace)
    if n == 0:
        return Footprint(0, 0, 0, 0, 0, 0)
    lo = int(trace.addrs.min())
    hi = int(trace.addrs.max())
    n_store = int(np.count_nonzero(trace.is_store))
    return Footprint(
        distinct_words=int(np.unique(trace.words).size),
        min_addr=lo,
        max_addr=hi,
        span_words=(hi - lo) // WORD_BYTES + 1,
        n_load=n - n_store,
        n_store=n_store,
    )


class AccessCounts(NamedTuple):
    n_load: int
    n_store: int


def interval_access_counts(trace: Trace, schedule) -> list[AccessCounts]:
    """Number of loads and stores executed in each interval of ``schedule``."""
    iv = schedule.assign(trace.cycles)
    n = schedule.n_intervals
    stores = np.bincount(iv, weights=trace.is_store, minlength=n).astype(np.int64)
    total = np.bincount(iv, minlength=n)
    return [AccessCounts(int(t - s), int(s)) for t, s in zip(total, stores)]


# -- synthesis ---------------------------------------------------------------

LOCALITIES = ("sequential", "uniform", "looped")


@dataclass(frozen=True)
class SyntheticProfile:
    n_events: int
    addr_range_words: int = 1024
    store_fraction: float = 0.3
    locality: str = "uniform"
    base_addr: int = 0x10000
    # looped locality: size of the working window and accesses per window
    loop_window_words: int = 64
    loop_phase_events: int = 2000

    def __post_init__(self):
        if self.n_events < 0:
            raise ValueError("n_events must be >= 0")
        if not 0.0 <= self.store_fraction <= 1.0:
            raise ValueError("store_fraction must lie in [0, 1]")
        if self.locality not in LOCALITIES:
            raise ValueError(f"locality must be one of {LOCALITIES}")
        if self.addr_range_words < 1:
            raise ValueError("addr_range_words must be >= 1")
        if self.base_addr % WORD_BYTES:
            raise ValueError("base_addr must be word aligned")


def make_rng(seed) -> np.random.Generator:
    """Seeded Philox generator; the one RNG used across the package."""
    return np.random.Generator(np.random.Philox(seed))


def gen_synthetic_trace(profile: SyntheticProfile, seed: int = 0) -> Trace:
    n = profile.n_events
    rng = make_rng(seed)
    strides = rng.integers(1, 11, size=n)
    cycles = np.cumsum(strides)
    stores = rng.random(n) < profile.store_fraction
    span = profile.addr_range_words
    idx = np.arange(n)
    if profile.locality == "sequential":
        words = idx % span
    elif profile.locality == "uniform":
        words = rng.integers(0, span, size=n)
    else:
        window = min(profile.loop_window_words, span)
        phase = idx // max(profile.loop_phase_events, 1)
        start = (phase * max(window // 2, 1)) % span
        words = (start + idx % window) % span
    addrs = profile.base_addr + words.astype(np.int64) * WORD_BYTES
    return Trace(cycles, addrs, stores)

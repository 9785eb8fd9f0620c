"""Power-failure schedules.

Interval ``i`` covers cycles ``(boundaries[i-1], boundaries[i]]`` with the
first interval starting at cycle 0.  A power failure happens at every
boundary except the last one, which marks program completion.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidIntervalLength, InvalidProbability, ScheduleError, ScheduleTooShort
from .trace import make_rng


@dataclass(frozen=True)
class FailureSchedule:
    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(x) for x in self.boundaries)
        if not b:
            raise ScheduleError("a schedule needs at least one boundary")
        if b[0] < 0 or any(y <= x for x, y in zip(b, b[1:])):
            raise ScheduleError("boundaries must be non-negative and strictly increasing")
        object.__setattr__(self, "boundaries", b)

    @property
    def n_intervals(self) -> int:
        return len(self.boundaries)

    @property
    def n_failures(self) -> int:
        """Number of interruptions (n_i); the final interval ends by completion."""
        return len(self.boundaries) - 1

    def assign(self, cycles) -> np.ndarray:
        """Interval index of every cycle stamp in ``cycles``."""
        cycles = np.asarray(cycles, dtype=np.int64)
        if len(cycles) and int(cycles.max()) > self.boundaries[-1]:
            raise ScheduleTooShort(
                f"last boundary {self.boundaries[-1]} does not cover cycle {int(cycles.max())}"
            )
        return np.searchsorted(np.asarray(self.boundaries, dtype=np.int64), cycles, side="left")

    def interval_lengths(self) -> list[int]:
        b = (-1,) + self.boundaries
        return [y - x for x, y in zip(b, b[1:])]

    def to_json(self) -> str:
        return json.dumps(list(self.boundaries))

    @classmethod
    def from_json(cls, text: str) -> "FailureSchedule":
        return cls(tuple(json.loads(text)))


def fixed_schedule(last_cycle: int, n_prog_cycles: int) -> FailureSchedule:
    """Equal intervals of ``n_prog_cycles``; enough of them to cover ``last_cycle``.

    Interval ``k`` holds cycles ``[k*n, (k+1)*n)``, so with ``n=100`` the
    failure falls after cycle 99 and cycle 104 runs in interval 1.
    """
    if n_prog_cycles < 1:
        raise InvalidIntervalLength(f"interval length must be >= 1, got {n_prog_cycles}")
    n = max(-(-(last_cycle + 1) // n_prog_cycles), 1)
    return FailureSchedule(tuple(k * n_prog_cycles - 1 for k in range(1, n + 1)))


def random_schedule(last_cycle: int, failure_prob_per_cycle: float, seed: int = 0) -> FailureSchedule:
    """Independent per-cycle failures with probability ``failure_prob_per_cycle``.

    Gaps between failures are drawn as geometric variables, which is the
    same distribution as a Bernoulli trial on every cycle.  Failures are
    kept if they fall strictly before ``last_cycle``; a final boundary at
    ``last_cycle + 1`` closes the run.
    """
    p = failure_prob_per_cycle
    if not 0.0 < p < 1.0:
        raise InvalidProbability(f"failure probability must lie in (0, 1), got {p}")
    rng = make_rng(seed)
    failures: list[int] = []
    pos = -1
    expected = int(last_cycle * p) + 16
    while True:
        gaps = rng.geometric(p, size=expected)
        points = pos + np.cumsum(gaps)
        keep = points[points < last_cycle]
        failures.extend(keep.tolist())
        if len(keep) < len(points):
            break
        pos = int(points[-1])
    return FailureSchedule(tuple(failures) + (last_cycle + 1,))

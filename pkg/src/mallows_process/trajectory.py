"""Path of a single inversion coordinate I_j(t)."""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CoordinateTrajectory:
    """Increasing unit-step path of coordinate ``j`` on ``[0, horizon]``.

    ``jump_times[k-1]`` is the time the coordinate reaches level ``k``.  Jumps
    after the horizon are censored (absent), never clamped.
    """

    j: int
    jump_times: tuple
    horizon: float

    def __post_init__(self):
        times = tuple(float(x) for x in self.jump_times)
        if self.j < 1:
            raise ValueError("coordinate index must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if len(times) > self.j - 1:
            raise ValueError(f"coordinate {self.j} cannot exceed level {self.j - 1}")
        prev = 0.0
        for x in times:
            if not x > prev:
                raise ValueError(f"jump times must be positive and strictly increasing: {times}")
            if x > self.horizon or not math.isfinite(x):
                raise ValueError(f"jump time {x} beyond horizon {self.horizon}")
            prev = x
        object.__setattr__(self, "jump_times", times)

    @property
    def final_level(self) -> int:
        return len(self.jump_times)

    def level_at(self, t: float) -> int:
        """Right-continuous level: a jump at exactly ``t`` counts."""
        return bisect.bisect_right(self.jump_times, t)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"j": self.j, "k": k, "t": t}) + "\n"
            for k, t in enumerate(self.jump_times, start=1)
        )

"""Attack outcome record shared by every attack runner."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

SUCCESS = "SUCCESS"
FAILURE = "FAILURE"


@dataclass
class DistinguisherVerdict:
    n_zero: int
    n_tot: int
    threshold: float
    ratio: float = field(init=False)
    verdict: bool = field(init=False)

    def __post_init__(self):
        self.ratio = self.n_zero / self.n_tot if self.n_tot else 0.0
        self.verdict = bool(self.n_tot) and self.ratio >= self.threshold

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class AttackReport:
    attack: str
    status: str
    seed: int | None
    params: dict
    counters: dict = field(default_factory=dict)
    statistic: float | None = None
    threshold: float | None = None
    verdict: bool | None = None
    details: dict = field(default_factory=dict)
    wall_time: float = 0.0
    failure_reason: str | None = None

    def as_dict(self) -> dict:
        return asdict(self)


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False

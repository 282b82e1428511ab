"""Lake-wide clock.

Every timestamp in the system (manifest, catalog, audit, ingestion metrics,
job log) comes from one injected clock so tests can pin time exactly.
Timestamps are unix milliseconds as floats; the wall clock keeps
sub-millisecond resolution, which the ingestion-time metric needs since a
single record commits in well under a millisecond.
"""

import time


class WallClock:
    """Real time, fractional unix milliseconds."""

    def now(self) -> float:
        return time.time_ns() / 1e6


class SimulatedClock:
    """Manually driven clock for deterministic tests.

    With tick > 0, each now() call returns the current time and then
    advances by tick, so consecutive reads are strictly increasing.
    """

    def __init__(self, start: float = 0.0, tick: float = 0.0):
        self._now = float(start)
        self.tick = float(tick)

    def now(self) -> float:
        t = self._now
        self._now += self.tick
        return t

    def advance(self, millis: float) -> None:
        if millis < 0:
            raise ValueError("clock cannot move backwards")
        self._now += millis

"""Handover trigger, handover execution and radio-link-failure state machines.

These are pure per-terminal state machines driven by one call per tick with
the current filtered measurements / link quality, so they can be exercised
with scripted traces independently of any channel model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

_EPS = 1e-9


@dataclass(frozen=True)
class MobilityThresholds:
    a3_offset_db: float = 3.0
    time_to_trigger_s: float = 0.08
    qout_db: float = -8.0  # SINR below this: link unusable, T310 runs
    qin_db: float = -6.0   # SINR above this: T310 cancelled
    t310_s: float = 0.6
    t_ho_s: float = 0.04            # random access period of a handover
    reestablish_delay_s: float = 0.2


class A3Tracker:
    """Per-neighbor timers for the entering condition of the A3 trigger.

    A neighbor accrues time only while its filtered value strictly exceeds
    the serving value plus the pair offset; equality resets the timer.  When
    a timer first reaches the time to trigger, the strongest qualifying
    neighbor is reported and all timers reset.
    """

    def __init__(self, offset_db: float, time_to_trigger_s: float):
        self.offset_db = offset_db
        self.time_to_trigger_s = time_to_trigger_s
        self.timers: dict = {}

    def reset(self):
        self.timers.clear()

    def update(self, serving_db: float, neighbors_db: dict, tick_s: float):
        """Advance timers one tick; returns the reported cell id or None."""
        threshold = serving_db + self.offset_db
        expired = []
        for cell, value in neighbors_db.items():
            if value > threshold:
                self.timers[cell] = self.timers.get(cell, 0.0) + tick_s
                if self.timers[cell] >= self.time_to_trigger_s - _EPS:
                    expired.append(cell)
            else:
                self.timers[cell] = 0.0
        if not expired:
            return None
        target = max(expired, key=lambda c: neighbors_db[c])
        self.reset()
        return target


@dataclass
class PendingHandover:
    target: object
    phase: str  # "command" | "random_access"
    elapsed_s: float = 0.0


class HandoverProcess:
    """Command delivery then a fixed-length random access toward the target.

    The command is received only if the serving-link SINR exceeds the outage
    threshold when it is delivered.  Random access lasts t_ho_s, during
    which the terminal is in outage; it completes only if the target SINR
    stays above the outage threshold throughout.
    """

    def __init__(self, thresholds: MobilityThresholds):
        self.thr = thresholds
        self.pending: PendingHandover | None = None

    @property
    def in_random_access(self) -> bool:
        return self.pending is not None and self.pending.phase == "random_access"

    def start(self, target, serving_sinr_db: float) -> str:
        """Deliver the command; returns 'accepted' or 'command_failed'."""
        if serving_sinr_db <= self.thr.qout_db:
            self.pending = None
            return "command_failed"
        self.pending = PendingHandover(target, "random_access")
        return "accepted"

    def step(self, target_sinr_db: float, tick_s: float) -> str | None:
        """Advance random access one tick: None, 'failed' or 'complete'."""
        if not self.in_random_access:
            return None
        if target_sinr_db <= self.thr.qout_db:
            self.pending = None
            return "failed"
        self.pending.elapsed_s += tick_s
        if self.pending.elapsed_s >= self.thr.t_ho_s - _EPS:
            target = self.pending.target
            self.pending = None
            self._completed_target = target
            return "complete"
        return None

    @property
    def completed_target(self):
        return self._completed_target


class RlfMonitor:
    """T310 supervision of the serving-link quality with hysteresis.

    The timer starts when the quality drops below the outage threshold,
    cancels only when it exceeds the recovery threshold, and declares a
    radio link failure on expiry.
    """

    def __init__(self, thresholds: MobilityThresholds):
        self.thr = thresholds
        self.timer_s: float | None = None

    @property
    def running(self) -> bool:
        return self.timer_s is not None

    def reset(self):
        self.timer_s = None

    def update(self, sinr_db: float, tick_s: float) -> str | None:
        """Returns 't310_start', 't310_stop', 'rlf' or None for this tick."""
        if self.timer_s is None:
            if sinr_db < self.thr.qout_db:
                self.timer_s = tick_s
                if self.timer_s >= self.thr.t310_s - _EPS:
                    self.timer_s = None
                    return "rlf"
                return "t310_start"
            return None
        if sinr_db > self.thr.qin_db:
            self.timer_s = None
            return "t310_stop"
        self.timer_s += tick_s
        if self.timer_s >= self.thr.t310_s - _EPS:
            self.timer_s = None
            return "rlf"
        return None

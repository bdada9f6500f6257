"""
Discrete-event kernel.

The kernel owns the simulated clock, an ordered event queue and the seeded
random generator.  Time advances in integer ticks of 100 ms.  Within a tick,
all discrete events fire first, in ``(fire_at, seq)`` order, and then every
registered per-tick hook runs once.

Example:

    >>> kernel = Kernel(seed=42)
    >>> fired = []
    >>> kernel.schedule(10, lambda: fired.append(kernel.now()))
    0
    >>> kernel.run_until(15)
    1
    >>> fired
    [10]
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Tuple

import numpy as np

from .config import TICK_S
from .errors import SchedulingInPast

logger = logging.getLogger(__name__)

SimTime = int
"""Simulated time in ticks; one tick is 100 ms."""

TICKS_PER_SECOND = 10


def seconds_to_ticks(seconds: float) -> SimTime:
    """Convert seconds to ticks.

    Raises
    ------
    ValueError
        If ``seconds`` is negative or not a multiple of 0.1 s.
    """
    ticks = seconds * TICKS_PER_SECOND
    rounded = round(ticks)
    if seconds < 0 or abs(ticks - rounded) > 1e-6:
        raise ValueError(f"{seconds} s is not a non-negative multiple of {TICK_S} s")
    return int(rounded)


def ticks_to_seconds(ticks: SimTime) -> float:
    return ticks / TICKS_PER_SECOND


@dataclass(order=True, frozen=True)
class QueuedEvent:
    """An entry of the event queue, ordered by ``(fire_at, seq)``."""

    fire_at: SimTime
    seq: int
    action: Any = field(compare=False)


class SeededRng:
    """Portable seeded generator (numpy PCG64).

    Every random draw in the simulator goes through an instance of this class.
    """

    def __init__(self, seed: int) -> None:
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(seed))
        self.draws = 0

    def normal(self, std: float) -> float:
        self.draws += 1
        return float(self._generator.normal(0.0, std))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        self.draws += 1
        return float(self._generator.uniform(low, high))

    def integers(self, low: int, high: int) -> int:
        """Draw an integer in ``[low, high)``."""
        self.draws += 1
        return int(self._generator.integers(low, high))


TickHook = Callable[[SimTime], None]


class Kernel:
    """Single-threaded discrete-event engine.

    Actions are either zero-argument callables or arbitrary descriptors handed
    to ``dispatcher``.  The kernel records a dispatch trace of
    ``(fire_at, seq, label)`` tuples which is identical across runs for the
    same seed and event script.
    """

    def __init__(self, seed: int = 0, dispatcher: Optional[Callable[[Any], None]] = None) -> None:
        self.rng = SeededRng(seed)
        self._dispatcher = dispatcher
        self._queue: List[QueuedEvent] = []
        self._seq = itertools.count()
        self._now: SimTime = 0
        # Last tick whose hooks have run; -1 before the first tick.
        self._hooked_through: SimTime = -1
        self._hooks: List[TickHook] = []
        self.trace: List[Tuple[SimTime, int, str]] = []

    def now(self) -> SimTime:
        return self._now

    def pending(self) -> int:
        return len(self._queue)

    def add_tick_hook(self, hook: TickHook) -> None:
        """Register a hook run once per elapsed tick, after that tick's events."""
        self._hooks.append(hook)

    def schedule(self, at: SimTime, action: Any) -> int:
        """Enqueue ``action`` to fire at tick ``at`` and return its event id.

        Raises
        ------
        SchedulingInPast
            If ``at`` is before the current time.
        """
        if at < self._now:
            raise SchedulingInPast(f"cannot schedule at tick {at}, now is {self._now}")
        seq = next(self._seq)
        heapq.heappush(self._queue, QueuedEvent(int(at), seq, action))
        return seq

    def run_until(self, end: SimTime) -> int:
        """Advance to ``end`` and return the number of events fired.

        Events already due (scheduled at the current tick after its hooks ran)
        are dispatched first.  Then every tick up to and including ``end``
        fires its events followed by the tick hooks.
        """
        if end < self._now:
            raise SchedulingInPast(f"cannot run until tick {end}, now is {self._now}")
        fired = self._dispatch_due(self._now)
        for tick in range(self._hooked_through + 1, end + 1):
            self._now = tick
            fired += self._dispatch_due(tick)
            for hook in self._hooks:
                hook(tick)
            self._hooked_through = tick
        self._now = end
        return fired

    def _dispatch_due(self, tick: SimTime) -> int:
        fired = 0
        while self._queue and self._queue[0].fire_at <= tick:
            event = heapq.heappop(self._queue)
            self._now = event.fire_at
            self.trace.append((event.fire_at, event.seq, _label(event.action)))
            if self._dispatcher is not None:
                self._dispatcher(event.action)
            else:
                event.action()
            fired += 1
        self._now = tick
        return fired


def _label(action: Any) -> str:
    label = getattr(action, "label", None)
    if label is not None:
        return str(label)
    return getattr(action, "__qualname__", type(action).__name__)

"""Discrete-event engine: integer-nanosecond clock, ordered event queue and
seeded random streams."""

from __future__ import annotations

import enum
import hashlib
import heapq
import random
from typing import Any, Callable

NS_PER_S = 1_000_000_000
_push = heapq.heappush


def seconds(value: float) -> int:
    """Convert seconds to integer nanoseconds (rounded to nearest)."""
    return int(round(value * NS_PER_S))


def to_seconds(t_ns: int) -> float:
    return t_ns / NS_PER_S


def format_time(t_ns: int) -> str:
    """Exact decimal rendering of a nanosecond timestamp, 9 decimal places."""
    sign = "-" if t_ns < 0 else ""
    whole, frac = divmod(abs(t_ns), NS_PER_S)
    return f"{sign}{whole}.{frac:09d}"


class EventKind(enum.IntEnum):
    PACKET_GENERATION = 0
    TX_START = 1
    TX_END = 2
    WINDOW_OPEN = 3
    WINDOW_CLOSE = 4
    DC_RELEASE = 5
    DL_DISPATCH = 6


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class Event:
    __slots__ = ("fire_at", "sequence", "kind", "handler", "args", "cancelled")

    def __init__(self, fire_at: int, sequence: int, kind: EventKind,
                 handler: Callable[..., Any], args: tuple):
        self.fire_at = fire_at
        self.sequence = sequence
        self.kind = kind
        self.handler = handler
        self.args = args
        self.cancelled = False

    def __lt__(self, other: "Event") -> bool:
        return (self.fire_at, self.sequence) < (other.fire_at, other.sequence)

    def __repr__(self) -> str:
        return f"Event({self.kind.name}, t={format_time(self.fire_at)}, seq={self.sequence})"


class Engine:
    """Single-threaded event loop.

    Events are dispatched in ``(fire_at, sequence)`` order, so events sharing a
    timestamp fire in insertion order.
    """

    def __init__(self) -> None:
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self.dispatched = 0
        self.trace: list[tuple[int, int, int]] | None = None

    def __len__(self) -> int:
        return len(self._queue)

    def schedule(self, fire_at: int, kind: EventKind,
                 handler: Callable[..., Any], *args: Any) -> Event:
        if fire_at < self.now:
            raise SchedulingError(
                f"{kind.name} scheduled at {format_time(fire_at)} "
                f"before now={format_time(self.now)}")
        seq = self._seq
        self._seq = seq + 1
        ev = Event(fire_at, seq, kind, handler, args)
        _push(self._queue, (fire_at, seq, ev))
        return ev

    @staticmethod
    def cancel(event: Event) -> None:
        event.cancelled = True

    def pending(self) -> list[Event]:
        """Live (not cancelled) events still queued, in dispatch order."""
        return [ev for _, _, ev in sorted(self._queue) if not ev.cancelled]

    def clear(self) -> None:
        self._queue.clear()

    def run_until(self, end: int) -> int:
        """Dispatch every pending event with ``fire_at <= end``.

        Returns the number of events dispatched by this call. The clock is
        left at the last dispatched event (or ``end`` if the queue drained
        past it).
        """
        queue = self._queue
        pop = heapq.heappop
        trace = self.trace
        count = 0
        while queue and queue[0][0] <= end:
            fire_at, seq, ev = pop(queue)
            if ev.cancelled:
                continue
            self.now = fire_at
            if trace is not None:
                trace.append((fire_at, seq, int(ev.kind)))
            ev.handler(*ev.args)
            count += 1
        if not queue or queue[0][0] > end:
            self.now = max(self.now, end)
        self.dispatched += count
        return count


class RngStream:
    """A reproducible random stream identified by ``(seed, *stream_id)``.

    The underlying generator seed is a BLAKE2b digest of the master seed and
    the stream identifier, so streams are independent of creation order and of
    how many other streams exist.
    """

    __slots__ = ("seed", "stream_id", "_rng")

    def __init__(self, seed: int, *stream_id: Any):
        self.seed = int(seed)
        self.stream_id = tuple(stream_id)
        self._rng = random.Random(derive_seed(self.seed, *self.stream_id))

    def restart(self) -> None:
        self._rng = random.Random(derive_seed(self.seed, *self.stream_id))

    def uniform(self, lo: float, hi: float) -> float:
        return draw_uniform(self, lo, hi)

    def random(self) -> float:
        return self._rng.random()

    def randrange(self, n: int) -> int:
        return self._rng.randrange(n)

    def gauss(self, mu: float, sigma: float) -> float:
        return self._rng.gauss(mu, sigma)

    def choice(self, seq):
        return seq[self._rng.randrange(len(seq))]

    def numpy_seed(self) -> int:
        return derive_seed(self.seed, *self.stream_id, "numpy")


def derive_seed(seed: int, *parts: Any) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")


def draw_uniform(stream: RngStream, lo: float, hi: float) -> float:
    """Uniform draw in ``[lo, hi)``; returns ``lo`` when ``lo == hi``."""
    if lo > hi:
        raise ValueError(f"empty interval [{lo}, {hi})")
    if lo == hi:
        return lo
    value = lo + (hi - lo) * stream._rng.random()
    # float rounding can land exactly on hi for tiny intervals
    return value if value < hi else lo

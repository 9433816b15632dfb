"""Shared radio medium: concurrent transmissions, SF-isolation capture and
per-uplink outcome tags."""

from __future__ import annotations

import math
from typing import Iterable

from .phyreg import ED_SENSITIVITY, SPREADING_FACTORS
from .simcore import EventKind

UL = "UL"
DL = "DL"

# PHY outcome tags
S = "S"  # received
U = "U"  # under sensitivity
I = "I"  # interference  # noqa: E741
R = "R"  # no reception path available
T = "T"  # lost to a gateway transmission
OUTCOMES = (S, U, I, R, T)

# downlink delivery tags at the addressed device
DL_DELIVERED = "S"
DL_MISSED = "X"


class Transmission:
    __slots__ = ("id", "sender", "direction", "frequency", "sf", "tx_power", "start", "end",
                 "rx_power", "packet", "attempt", "target", "window", "overlaps", "outcome",
                 "receivers", "overrides_rx", "lost_at")

    def __init__(self, id, sender, direction, frequency, sf, tx_power, start, end,
                 rx_power=None, packet=None, attempt=0, target=None, window=0):
        self.id = id
        self.sender = sender
        self.direction = direction
        self.frequency = frequency
        self.sf = sf
        self.tx_power = tx_power
        self.start = start
        self.end = end
        self.rx_power = rx_power
        self.packet = packet
        self.attempt = attempt
        self.target = target
        self.window = window
        self.overlaps: list[Transmission] = []
        self.outcome: str | None = None
        self.receivers: list = []
        self.overrides_rx = False
        self.lost_at: int | None = None

    @property
    def airtime(self) -> int:
        return self.end - self.start

    def __repr__(self) -> str:
        return (f"Transmission({self.id}, {self.direction} from {self.sender}, "
                f"f={self.frequency}, SF{self.sf}, [{self.start}, {self.end}), {self.outcome})")


class IsolationMatrix:
    """Required signal-to-interference margin (dB) per (signal SF, interferer SF)."""

    def __init__(self, co_sf: float = 6.0, inter_sf: float = -16.0,
                 overrides: dict[tuple[int, int], float] | None = None):
        self.table = {(a, b): (co_sf if a == b else inter_sf)
                      for a in SPREADING_FACTORS for b in SPREADING_FACTORS}
        if overrides:
            self.table.update(overrides)
        for (a, b), v in self.table.items():
            if a == b and v <= 0:
                raise ValueError("co-SF thresholds must be positive")
            if a != b and v > 0:
                raise ValueError("inter-SF thresholds must be <= 0")

    def threshold(self, sf_signal: int, sf_interferer: int) -> float:
        return self.table[(sf_signal, sf_interferer)]


def dbm_to_mw(p: float) -> float:
    return 10.0 ** (p / 10.0)


def resolve_capture(signal_power: float, signal_sf: int, start: int, end: int,
                    interferers: Iterable[tuple[float, int, int, int]],
                    matrix: IsolationMatrix) -> bool:
    """Whether a signal survives its interferers.

    ``interferers`` yields ``(power_dbm, sf, start, end)``. Interferer power is
    weighted by the fraction of the signal it overlaps and summed per SF; the
    signal survives when its margin over every SF bucket meets the threshold.
    """
    duration = end - start
    buckets: dict[int, float] = {}
    for power, sf, s, e in interferers:
        overlap = (e if e < end else end) - (s if s > start else start)
        if overlap <= 0:
            continue
        buckets[sf] = buckets.get(sf, 0.0) + dbm_to_mw(power) * overlap / duration
    for sf, mw in buckets.items():
        if signal_power - 10.0 * math.log10(mw) < matrix.threshold(signal_sf, sf):
            return False
    return True


class Medium:
    """Tracks in-flight transmissions per carrier and routes begin/end
    notifications to the gateway and to listening devices."""

    def __init__(self, sim):
        self.sim = sim
        self.engine = sim.engine
        self.links = sim.links
        self.matrix = sim.isolation
        self.active: dict[int, list[Transmission]] = {f: [] for f in sim.plan._by_freq}
        self.log: list[Transmission] = []
        self.mislock = sim.cfg.mac.mislock
        self._next_id = 0

    def new_id(self) -> int:
        self._next_id += 1
        return self._next_id - 1

    def begin_transmission(self, tx: Transmission) -> None:
        current = self.active[tx.frequency]
        for other in current:
            other.overlaps.append(tx)
            tx.overlaps.append(other)
        current.append(tx)
        self.log.append(tx)
        self.engine.schedule(tx.end, EventKind.TX_END, self.end_transmission, tx)
        if tx.direction == UL:
            self.sim.gateway.on_preamble(tx)

    def end_transmission(self, tx: Transmission) -> None:
        self.active[tx.frequency].remove(tx)
        if tx.direction == UL:
            # the sender arms its windows before the network reacts
            self.sim.devices[tx.sender].on_uplink_end(tx)
            self.sim.gateway.on_uplink_end(tx)
        else:
            self.sim.gateway.on_downlink_end(tx)
            if tx.outcome is None:
                tx.outcome = DL_MISSED
        for dev in tx.receivers:
            ok = self.received_by(tx, dev.id)
            if tx.direction == DL and tx.target == dev.id and ok:
                tx.outcome = DL_DELIVERED
            dev.on_reception_end(tx, ok)
        tx.overlaps = []
        tx.receivers = []

    def power_at(self, tx: Transmission, dev_id: int) -> float:
        return tx.tx_power - self.links.loss(tx.sender, dev_id)

    def received_by(self, tx: Transmission, dev_id: int) -> bool:
        power = self.power_at(tx, dev_id)
        if power < ED_SENSITIVITY[tx.sf]:
            return False
        loss = self.links.loss
        interferers = [(o.tx_power - loss(o.sender, dev_id), o.sf, o.start, o.end)
                       for o in tx.overlaps if o.sender != dev_id]
        return resolve_capture(power, tx.sf, tx.start, tx.end, interferers, self.matrix)

    def find_preamble(self, frequency: int, sf: int, open_at: int, close_at: int,
                      dev_id: int) -> Transmission | None:
        """Earliest transmission a listening device would lock on to."""
        best = None
        for tx in self.active[frequency]:
            if tx.sf != sf or not open_at <= tx.start < close_at or tx.sender == dev_id:
                continue
            if tx.direction == UL and not self.mislock:
                continue
            if self.power_at(tx, dev_id) < ED_SENSITIVITY[sf]:
                continue
            if best is None or (tx.start, tx.id) < (best.start, best.id):
                best = tx
        return best

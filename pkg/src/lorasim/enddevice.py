"""Class-A end device: periodic traffic, duty-cycled uplinks, RX1/RX2
windows and confirmed retransmissions."""

from __future__ import annotations

from .medium import DL, UL, Transmission
from .netserver import window_params
from .phyreg import SYMBOL_NS, DutyCycleBudget, airtime_ns
from .simcore import EventKind, RngStream, draw_uniform, seconds

IDLE = "IDLE"
TX = "TX"
WAIT1 = "WAIT1"
RX1 = "RX1"
WAIT2 = "WAIT2"
RX2 = "RX2"
RETRY_BACKOFF = "RETRY_BACKOFF"


class Packet:
    __slots__ = ("device", "pid", "gen_time", "confirmed", "dropped", "attempts",
                 "delivered", "delivered_attempt", "acked", "rx1_opened", "rx2_opened", "done")

    def __init__(self, device: int, pid: int, gen_time: int, confirmed: bool):
        self.device = device
        self.pid = pid
        self.gen_time = gen_time
        self.confirmed = confirmed
        self.dropped = False
        self.attempts = 0
        self.delivered = False
        self.delivered_attempt = 0
        self.acked = False
        self.rx1_opened = 0
        self.rx2_opened = 0
        self.done = False


class EndDevice:
    """One Class-A device. All behaviour is driven by engine callbacks."""

    def __init__(self, sim, dev_id: int, sf: int, confirmed: bool, period: int, phase: int,
                 max_attempts: int, data_reply: bool = False):
        self.sim = sim
        self.engine = sim.engine
        self.id = dev_id
        self.sf = sf
        self.confirmed = confirmed
        self.period = period
        self.phase = phase
        self.max_attempts = max_attempts if confirmed else 1
        self.data_reply = data_reply
        self.tx_power = sim.cfg.phy.tx_power
        self.rx_power_at_gw = self.tx_power - sim.links.gateway_loss(dev_id)
        self.airtime = airtime_ns(sf, sim.ul_params)
        self.budget = DutyCycleBudget(dev_id, sim.plan)
        self.channels = sim.plan.uplink_channels
        self.rng = RngStream(sim.seed, "device", dev_id)
        self.window_symbols = sim.cfg.mac.window_symbols
        policy = sim.cfg.policy
        self._windows = {f: (window_params(policy, sim.plan, f, sf, 1),
                             window_params(policy, sim.plan, f, sf, 2))
                         for f in self.channels}
        self.state = IDLE
        self.pending: Packet | None = None
        self.attempt = 0
        self.packets: list[Packet] = []
        self.rx1_opened_count = 0
        self.rx2_opened_count = 0
        self.superseded = 0
        self.attempt_hist = [0] * 9
        # current exchange
        self._ul: Transmission | None = None
        self._win = None  # (which, frequency, sf, open_at, close_at)
        self._rx2 = None

    def start(self) -> None:
        self.engine.schedule(self.phase, EventKind.PACKET_GENERATION, self.generate_packet)

    # ---------------------------------------------------------- traffic
    def generate_packet(self) -> None:
        if self.sim.stopping:
            return
        now = self.engine.now
        self.engine.schedule(now + self.period, EventKind.PACKET_GENERATION, self.generate_packet)
        pkt = Packet(self.id, len(self.packets), now, self.confirmed)
        self.packets.append(pkt)
        if self.state != IDLE:
            pkt.dropped = True
            pkt.done = True
            self.superseded += 1
            return
        self.pending = pkt
        self.attempt = 0
        self._schedule_attempt(now)

    def _schedule_attempt(self, earliest: int) -> None:
        self.state = TX if earliest <= self.engine.now else RETRY_BACKOFF
        at = self.budget.earliest(self.channels[0], earliest)
        self.engine.schedule(at, EventKind.TX_START, self.transmit_attempt)

    def transmit_attempt(self) -> Transmission | None:
        sim = self.sim
        if sim.stopping:
            return None
        now = self.engine.now
        freq = self.channels[self.rng.randrange(len(self.channels))]
        self.attempt += 1
        pkt = self.pending
        pkt.attempts = self.attempt
        tx = Transmission(sim.medium.new_id(), self.id, UL, freq, self.sf, self.tx_power,
                          now, now + self.airtime, rx_power=self.rx_power_at_gw,
                          packet=pkt, attempt=self.attempt)
        self.budget.consume(freq, now, self.airtime)
        self.state = TX
        self._ul = tx
        sim.medium.begin_transmission(tx)
        return tx

    # ---------------------------------------------------------- windows
    def on_uplink_end(self, tx: Transmission) -> None:
        self.state = WAIT1
        (f1, sf1), self._rx2 = self._windows[tx.frequency]
        self.open_window(1, f1, sf1, tx.end + self.sim.rx1_delay)

    def open_window(self, which: int, freq: int, sf: int, open_at: int) -> None:
        """Arm receive window ``which``; it is evaluated when it closes."""
        close_at = open_at + self.window_symbols * SYMBOL_NS[sf]
        self._win = (which, freq, sf, open_at, close_at)
        self.engine.schedule(close_at, EventKind.WINDOW_CLOSE, self.close_window)

    def close_window(self) -> None:
        """Count the elapsed window and lock on to the first preamble that
        started inside it, if any."""
        which, freq, sf, open_at, close_at = self._win
        pkt = self.pending
        if which == 1:
            self.rx1_opened_count += 1
            pkt.rx1_opened += 1
        else:
            self.rx2_opened_count += 1
            pkt.rx2_opened += 1
        sim = self.sim
        tx = sim.medium.find_preamble(freq, sf, open_at, close_at, self.id)
        if sim.window_log is not None:
            sim.window_log.append((self.id, self._ul.id, which, open_at, close_at, freq, sf,
                                   -1 if tx is None else tx.id))
        if tx is not None:
            self.state = RX1 if which == 1 else RX2
            tx.receivers.append(self)
            return
        self._window_done(which, False)

    def window_reception(self, tx: Transmission, ok: bool) -> bool:
        """A received frame completes the exchange only if it is a downlink
        addressed to this device."""
        return ok and tx.direction == DL and tx.target == self.id

    def on_reception_end(self, tx: Transmission, ok: bool) -> None:
        self._window_done(self._win[0], self.window_reception(tx, ok))

    def _window_done(self, which: int, ack: bool) -> None:
        now = self.engine.now
        if ack:
            self.pending.acked = True
            self._finish()
            return
        if which == 1:
            rx2_open = self._ul.end + self.sim.rx2_delay
            if now <= rx2_open:
                self.state = WAIT2
                freq, sf = self._rx2
                self.open_window(2, freq, sf, rx2_open)
                return
            # still busy receiving when RX2 should have opened
        if self.confirmed and self.attempt < self.max_attempts:
            mac = self.sim.cfg.mac
            delay = seconds(draw_uniform(self.rng, mac.backoff_min, mac.backoff_max))
            self._schedule_attempt(now + delay)
            self.state = RETRY_BACKOFF
            return
        self._finish()

    def _finish(self) -> None:
        pkt = self.pending
        pkt.done = True
        self.attempt_hist[self.attempt] += 1
        self.pending = None
        self._ul = None
        self.state = IDLE

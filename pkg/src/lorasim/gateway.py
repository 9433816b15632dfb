"""Gateway: reception-path pool, half/full-duplex radio, TX-vs-RX conflict
policy and downlink dispatch under the gateway duty cycle."""

from __future__ import annotations

from dataclasses import dataclass, field

from .medium import DL, R, S, T, U, I, Transmission, resolve_capture
from .phyreg import GW_SENSITIVITY, DutyCycleBudget, airtime_ns, symbol_time_ns
from .simcore import EventKind

GATEWAY_ID = -1

TX_PRIORITY = "tx_priority"
RX_PRIORITY = "rx_priority"
DYNAMIC = "dynamic"


@dataclass
class ReceptionPath:
    id: int
    frequency: int
    locked: Transmission | None = None


def assign_paths(n_paths: int, channels: tuple[int, ...]) -> list[ReceptionPath]:
    """Spread paths round-robin over the uplink carriers (8 -> 3/3/2)."""
    return [ReceptionPath(i, channels[i % len(channels)]) for i in range(n_paths)]


@dataclass(eq=False)
class DownlinkJob:
    device: int
    window: int  # 1 or 2
    frequency: int
    sf: int
    open_at: int
    deadline: int  # dispatch must start strictly before this
    uplink: Transmission
    high_priority: bool = False
    rx2: tuple[int, int] | None = None  # fallback (frequency, sf)
    rx2_open: int = 0
    deadline_event: object = field(default=None, repr=False)


def duplex_kill_set(duplex: str, receptions, dl_frequency: int) -> list[Transmission]:
    """Receptions a downlink on ``dl_frequency`` would destroy."""
    if duplex == "half":
        return list(receptions)
    return [tx for tx in receptions if tx.frequency == dl_frequency]


class Gateway:
    def __init__(self, sim):
        cfg = sim.cfg.gateway
        self.sim = sim
        self.engine = sim.engine
        self.duplex = cfg.duplex
        self.policy = cfg.conflict_policy
        self.paths = assign_paths(cfg.reception_paths, sim.plan.uplink_channels)
        self.paths_by_freq: dict[int, list[ReceptionPath]] = {}
        for p in self.paths:
            self.paths_by_freq.setdefault(p.frequency, []).append(p)
        self.receiving: dict[int, ReceptionPath] = {}  # tx id -> path
        self._rx_tx: dict[int, Transmission] = {}
        self.budget = DutyCycleBudget(GATEWAY_ID, sim.plan, enforced=cfg.dc_enforced)
        self.current_dl: Transmission | None = None
        self.waiting: list[DownlinkJob] = []
        self.dl_params = sim.dl_params
        self.window_symbols = sim.cfg.mac.window_symbols
        self.log: list[tuple] = []  # (time, event, device, window, frequency, sf, detail)
        self.kills = 0
        self.unserved = 0

    # ------------------------------------------------------------ uplink
    def on_preamble(self, tx: Transmission) -> str | None:
        if tx.rx_power < GW_SENSITIVITY[tx.sf]:
            tx.outcome = U
            return U
        path = None
        for p in self.paths_by_freq.get(tx.frequency, ()):
            if p.locked is None:
                path = p
                break
        if path is None:
            tx.outcome = R
            return R
        dl = self.current_dl
        if dl is not None and (self.duplex == "half" or dl.frequency == tx.frequency):
            # receiver is occupied by our own transmission
            tx.outcome = T if dl.overrides_rx else R
            tx.lost_at = tx.start
            return tx.outcome
        path.locked = tx
        self.receiving[tx.id] = path
        self._rx_tx[tx.id] = tx
        return None

    def _release(self, tx: Transmission) -> None:
        path = self.receiving.pop(tx.id)
        del self._rx_tx[tx.id]
        path.locked = None

    def on_uplink_end(self, tx: Transmission) -> None:
        if tx.id not in self.receiving:
            return
        self._release(tx)
        interferers = [(o.rx_power, o.sf, o.start, o.end) for o in tx.overlaps if o.direction != DL]
        tx.outcome = S if resolve_capture(tx.rx_power, tx.sf, tx.start, tx.end,
                                          interferers, self.sim.isolation) else I
        if self.waiting:
            self._retry_waiting()
        if tx.outcome == S:
            self.sim.netserver.on_uplink_delivered(tx)

    def classify_outcome(self, tx: Transmission) -> str:
        if tx.outcome is None:
            raise RuntimeError("transmission still in progress")
        return tx.outcome

    # ---------------------------------------------------------- downlink
    def rx_yields(self, job: DownlinkJob) -> bool:
        if self.policy == RX_PRIORITY:
            return True
        if self.policy == DYNAMIC:
            return not job.high_priority
        return False

    def submit(self, job: DownlinkJob) -> None:
        self.engine.schedule(job.open_at, EventKind.DL_DISPATCH, self._dispatch, job)

    def _dispatch(self, job: DownlinkJob) -> None:
        status = self.try_transmit(job, self.engine.now)
        if status == "deferred" and job.deadline_event is None:
            job.deadline_event = self.engine.schedule(
                job.deadline, EventKind.DL_DISPATCH, self._expire, job)

    def try_transmit(self, job: DownlinkJob, now: int) -> str:
        """Dispatch now if radio, duty cycle and policy allow; otherwise
        defer until the window closes, then fall back to RX2 or drop."""
        if now >= job.deadline:
            return self._missed(job)
        blocked_until = None
        if self.current_dl is not None:
            blocked_until = self.current_dl.end
        elif not self.budget.allows(job.frequency, now):
            blocked_until = self.budget.earliest(job.frequency, now)
            if blocked_until < job.deadline:
                self.engine.schedule(blocked_until, EventKind.DC_RELEASE, self._retry_waiting)
        elif self.rx_yields(job) and duplex_kill_set(self.duplex, self._rx_tx.values(), job.frequency):
            blocked_until = None
        else:
            self._transmit(job, now)
            return "dispatched"
        if blocked_until is not None and blocked_until >= job.deadline:
            return self._missed(job)
        if job not in self.waiting:
            self.waiting.append(job)
            self.log.append((now, "defer", job.device, job.window, job.frequency, job.sf, ""))
        return "deferred"

    def _expire(self, job: DownlinkJob) -> None:
        if job in self.waiting:
            self.waiting.remove(job)
            self._missed(job)

    def _retry_waiting(self) -> None:
        now = self.engine.now
        for job in list(self.waiting):
            if job not in self.waiting:
                continue
            if self.try_transmit(job, now) == "dispatched":
                self.waiting.remove(job)
                if job.deadline_event is not None:
                    self.engine.cancel(job.deadline_event)
            if self.current_dl is not None:
                break

    def _missed(self, job: DownlinkJob) -> str:
        if job in self.waiting:
            self.waiting.remove(job)
        if job.window == 1 and job.rx2 is not None:
            freq, sf = job.rx2
            nxt = DownlinkJob(job.device, 2, freq, sf, job.rx2_open,
                              job.rx2_open + self.window_symbols * symbol_time_ns(sf),
                              job.uplink, job.high_priority)
            self.log.append((self.engine.now, "fallback", job.device, 1, job.frequency, job.sf, ""))
            self.submit(nxt)
            return "fallback"
        self.unserved += 1
        self.log.append((self.engine.now, "drop", job.device, job.window, job.frequency, job.sf, ""))
        return "dropped"

    def _transmit(self, job: DownlinkJob, now: int) -> None:
        victims = duplex_kill_set(self.duplex, self._rx_tx.values(), job.frequency)
        for v in victims:
            self._release(v)
            v.outcome = T
            v.lost_at = now
            self.kills += 1
            self.log.append((now, "kill", v.sender, 0, v.frequency, v.sf, str(v.id)))
        sim = self.sim
        power = sim.plan.max_power(job.frequency)
        tx = Transmission(sim.medium.new_id(), GATEWAY_ID, DL, job.frequency, job.sf, power,
                          now, now + airtime_ns(job.sf, self.dl_params),
                          packet=job.uplink.packet, attempt=job.uplink.attempt,
                          target=job.device, window=job.window)
        tx.overrides_rx = not self.rx_yields(job)
        self.budget.consume(job.frequency, now, tx.end - now)
        self.current_dl = tx
        self.log.append((now, "dispatch", job.device, job.window, job.frequency, job.sf,
                         "high" if job.high_priority else "low"))
        sim.medium.begin_transmission(tx)

    def on_downlink_end(self, tx: Transmission) -> None:
        self.current_dl = None
        if self.waiting:
            self._retry_waiting()

    @property
    def locked_paths(self) -> int:
        return len(self.receiving)

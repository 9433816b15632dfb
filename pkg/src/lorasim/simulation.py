"""Assembles one simulated cell and runs it."""

from __future__ import annotations

from .config import SimConfig
from .enddevice import EndDevice
from .gateway import Gateway
from .medium import IsolationMatrix, Medium
from .netserver import NetworkServer
from .phyreg import DEFAULT_PLAN, TransmissionParams
from .scenario import World, build_scenario
from .simcore import Engine, EventKind, seconds


class Simulation:
    """One replication: world, devices, gateway and network server sharing a
    single engine."""

    def __init__(self, cfg: SimConfig, seed: int | None = None, *,
                 record_windows: bool = False, trace: bool = False,
                 world: World | None = None):
        self.cfg = cfg
        self.seed = cfg.scenario.master_seed if seed is None else seed
        self.engine = Engine()
        if trace:
            self.engine.trace = []
        self.plan = DEFAULT_PLAN
        phy = cfg.phy
        self.ul_params = TransmissionParams(phy.payload_bytes, phy.explicit_header, phy.code_rate,
                                            phy.preamble_symbols, phy.uplink_crc)
        self.dl_params = TransmissionParams(phy.ack_payload_bytes, phy.explicit_header, phy.code_rate,
                                            phy.preamble_symbols, phy.downlink_crc)
        self.rx1_delay = seconds(cfg.mac.rx1_delay)
        self.rx2_delay = seconds(cfg.mac.rx2_delay)
        self.isolation = IsolationMatrix(cfg.capture.co_sf_threshold, cfg.capture.inter_sf_threshold)
        self.window_log: list[tuple] | None = [] if record_windows else None

        self.world = world if world is not None else build_scenario(cfg, self.seed)
        self.links = self.world.links
        self.medium = Medium(self)
        self.gateway = Gateway(self)
        self.netserver = NetworkServer(self)
        self.devices: dict[int, EndDevice] = {}
        for spec in self.world.devices:
            self.devices[spec.id] = EndDevice(
                self, spec.id, spec.sf, spec.confirmed, seconds(spec.period), seconds(spec.phase),
                cfg.mac.max_attempts, spec.data_reply)

        sc = cfg.scenario
        self.duration = seconds(sc.duration)
        self.warmup = seconds(sc.warmup_s)
        self.end = self.duration + seconds(sc.drain)
        self.stopping = False

    def run(self) -> "Simulation":
        for dev in self.devices.values():
            dev.start()
        self.engine.run_until(self.end)
        # no new traffic or attempts past the end; let what is on air finish
        self.stopping = True
        self.engine.run_until(self.engine.now + seconds(self.cfg.scenario.drain) + seconds(3600))
        # long-period devices may still hold a future generation event; it would do nothing
        if any(ev.kind != EventKind.PACKET_GENERATION for ev in self.engine.pending()):
            raise RuntimeError("event queue did not drain after the end of the run")
        self.engine.clear()
        return self

    # ------------------------------------------------------------- views
    def counted(self, pkt) -> bool:
        return self.warmup <= pkt.gen_time < self.duration

    def packets(self, counted_only: bool = True):
        for dev in self.devices.values():
            for p in dev.packets:
                if not counted_only or self.counted(p):
                    yield p

    @property
    def transmissions(self):
        return self.medium.log

"""Network server: uplink deduplication, ACK generation and receive-window
parameter selection."""

from __future__ import annotations

from dataclasses import dataclass

from .config import PolicyConfig
from .gateway import DownlinkJob
from .phyreg import ChannelPlan, symbol_time_ns


@dataclass
class UplinkRecord:
    device: int
    packet: int
    first_seen: int
    attempts_seen: int = 1
    acks_sent: int = 0


def window_params(policy: PolicyConfig, plan: ChannelPlan, ul_frequency: int,
                  ul_sf: int, which: int) -> tuple[int, int]:
    """(frequency, sf) of receive window ``which`` (1 or 2) for an uplink.

    A window on the uplink carrier always uses the uplink SF. A window on the
    downlink-reserved carrier uses SF12, or the uplink SF with
    ``ack_data_rate``. ``subband_swap`` exchanges the two carriers.
    """
    on_uplink_carrier = (which == 1) != policy.subband_swap
    if on_uplink_carrier:
        return ul_frequency, ul_sf
    return plan.rx2_frequency, (ul_sf if policy.ack_data_rate else 12)


def mark_priority(job: DownlinkJob, data_reply: bool) -> DownlinkJob:
    """Data replies are urgent (transmit over receptions); bare ACKs yield."""
    job.high_priority = bool(data_reply)
    return job


class NetworkServer:
    def __init__(self, sim):
        self.sim = sim
        self.policy = sim.cfg.policy
        self.plan = sim.plan
        mac = sim.cfg.mac
        self.rx1_delay = sim.rx1_delay
        self.rx2_delay = sim.rx2_delay
        self.window_symbols = mac.window_symbols
        self.records: dict[tuple[int, int], UplinkRecord] = {}
        self.duplicates = 0

    def on_uplink_delivered(self, tx) -> DownlinkJob | None:
        pkt = tx.packet
        key = (tx.sender, pkt.pid)
        rec = self.records.get(key)
        if rec is None:
            rec = self.records[key] = UplinkRecord(tx.sender, pkt.pid, tx.end)
            pkt.delivered = True
            pkt.delivered_attempt = tx.attempt
        else:
            rec.attempts_seen += 1
            self.duplicates += 1
        if not pkt.confirmed:
            return None
        # a repeated attempt means the device missed our ACK: answer again
        f1, sf1 = window_params(self.policy, self.plan, tx.frequency, tx.sf, 1)
        f2, sf2 = window_params(self.policy, self.plan, tx.frequency, tx.sf, 2)
        open1 = tx.end + self.rx1_delay
        job = DownlinkJob(tx.sender, 1, f1, sf1, open1,
                          open1 + self.window_symbols * symbol_time_ns(sf1), tx,
                          rx2=(f2, sf2), rx2_open=tx.end + self.rx2_delay)
        mark_priority(job, self.sim.devices[tx.sender].data_reply)
        rec.acks_sent += 1
        self.sim.gateway.submit(job)
        return job

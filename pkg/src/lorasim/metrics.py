"""UL-PDR, CPSR, outcome breakdown and window counts; replication
aggregation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .medium import OUTCOMES, UL

Z95 = 1.959963984540054


@dataclass
class MetricsReport:
    generated: int = 0
    generated_confirmed: int = 0
    generated_unconfirmed: int = 0
    delivered: int = 0
    delivered_confirmed: int = 0
    delivered_unconfirmed: int = 0
    acked: int = 0
    dropped: int = 0
    ulpdr: float = math.nan
    ulpdr_confirmed: float = math.nan
    ulpdr_unconfirmed: float = math.nan
    cpsr: float = math.nan
    outcome_counts: dict[str, int] = field(default_factory=lambda: {o: 0 for o in OUTCOMES})
    ul_transmissions: int = 0
    dl_transmissions: int = 0
    avg_rx1_opened: float = math.nan
    avg_rx2_opened: float = math.nan
    avg_attempts_confirmed: float = math.nan
    unserved_acks: int = 0
    n_devices: int = 0
    n_out_of_coverage: int = 0
    cell_radius_m: float = math.nan
    empty: bool = True

    def flat(self) -> dict[str, float | int]:
        d = asdict(self)
        counts = d.pop("outcome_counts")
        for k in OUTCOMES:
            d[f"n_{k}"] = counts[k]
        d["empty"] = int(self.empty)
        return d


def _ratio(a: int, b: int) -> float:
    return a / b if b else math.nan


def compute_metrics(sim) -> MetricsReport:
    """Metrics over packets generated in ``[warmup, duration)``."""
    rep = MetricsReport()
    counted_ids = set()
    rx1 = rx2 = attempts = sent_conf = 0
    for p in sim.packets():
        counted_ids.add((p.device, p.pid))
        rep.generated += 1
        if p.dropped:
            rep.dropped += 1
        if p.confirmed:
            rep.generated_confirmed += 1
            if p.delivered:
                rep.delivered_confirmed += 1
            if p.acked:
                rep.acked += 1
            if not p.dropped:
                sent_conf += 1
                rx1 += p.rx1_opened
                rx2 += p.rx2_opened
                attempts += p.attempts
        else:
            rep.generated_unconfirmed += 1
            if p.delivered:
                rep.delivered_unconfirmed += 1
    rep.delivered = rep.delivered_confirmed + rep.delivered_unconfirmed
    for tx in sim.transmissions:
        pkt = tx.packet
        if tx.direction == UL:
            if (pkt.device, pkt.pid) in counted_ids:
                rep.ul_transmissions += 1
                rep.outcome_counts[tx.outcome] += 1
        elif (tx.target, pkt.pid) in counted_ids:
            rep.dl_transmissions += 1
    rep.ulpdr = _ratio(rep.delivered, rep.generated)
    rep.ulpdr_confirmed = _ratio(rep.delivered_confirmed, rep.generated_confirmed)
    rep.ulpdr_unconfirmed = _ratio(rep.delivered_unconfirmed, rep.generated_unconfirmed)
    rep.cpsr = _ratio(rep.acked, rep.generated_confirmed)
    rep.avg_rx1_opened = _ratio(rx1, sent_conf)
    rep.avg_rx2_opened = _ratio(rx2, sent_conf)
    rep.avg_attempts_confirmed = _ratio(attempts, sent_conf)
    rep.unserved_acks = sim.gateway.unserved
    rep.n_devices = len(sim.devices)
    rep.n_out_of_coverage = len(sim.world.out_of_coverage)
    rep.cell_radius_m = sim.world.radius
    rep.empty = rep.generated == 0
    return rep


def mean_ci(values: list[float]) -> tuple[float, float]:
    """Mean and normal-approximation 95% half-width, ignoring NaNs."""
    xs = [v for v in values if not (isinstance(v, float) and math.isnan(v))]
    if not xs:
        return math.nan, math.nan
    m = sum(xs) / len(xs)
    if len(xs) < 2:
        return m, math.nan
    var = sum((x - m) ** 2 for x in xs) / (len(xs) - 1)
    return m, Z95 * math.sqrt(var / len(xs))


def aggregate(rows: list[dict]) -> dict[str, float]:
    """Mean and CI half-width for every numeric column of per-replication rows."""
    out: dict[str, float] = {"replications": len(rows)}
    if not rows:
        return out
    for key, v in rows[0].items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            continue
        m, hw = mean_ci([float(r[key]) for r in rows])
        out[f"{key}_mean"] = m
        out[f"{key}_ci95"] = hw
    return out

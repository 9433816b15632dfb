"""CSV emission. Times are seconds with exactly nine decimals; floats use
fixed precision so identical runs produce identical bytes."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

from .medium import UL
from .simcore import format_time

TRANSMISSION_FIELDS = [
    "tx_id", "sender", "direction", "frequency_hz", "sf", "dr", "start_s", "airtime_s", "end_s",
    "tx_power_dbm", "rx_power_dbm", "outcome", "packet", "attempt", "target", "window", "counted",
]
DEVICE_FIELDS = [
    "device", "x_m", "y_m", "indoor", "wall_loss_db", "dr", "sf", "traffic", "period_s", "phase_s",
    "data_reply", "generated", "delivered", "acked", "dropped",
    *(f"attempts_{k}" for k in range(1, 9)), "rx1_opened", "rx2_opened",
]
GATEWAY_FIELDS = ["time_s", "event", "device", "window", "frequency_hz", "sf", "dr", "detail"]
WINDOW_FIELDS = ["device", "uplink_id", "window", "open_s", "close_s", "frequency_hz", "sf",
                 "locked_tx"]


def fmt(value) -> str:
    """Deterministic text for a CSV cell."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.6f}"
    return str(value)


def write_rows(path: Path, fields: list[str], rows: Iterable[Iterable]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([fmt(v) for v in row])
            n += 1
    return n


def write_dicts(path: Path, rows: list[dict], fields: list[str] | None = None) -> None:
    if fields is None:
        fields = []
        for r in rows:
            for k in r:
                if k not in fields:
                    fields.append(k)
    write_rows(path, fields, ([r.get(k, "") for k in fields] for r in rows))


def transmission_rows(sim):
    medium = sim.medium
    counted = {(p.device, p.pid) for p in sim.packets()}
    for tx in sim.transmissions:
        pkt = tx.packet
        if tx.direction == UL:
            rx = tx.rx_power
            key = (tx.sender, pkt.pid)
            target = ""
        else:
            rx = medium.power_at(tx, tx.target)
            key = (tx.target, pkt.pid)
            target = tx.target
        yield (tx.id, tx.sender, tx.direction, tx.frequency, tx.sf, 12 - tx.sf,
               format_time(tx.start), format_time(tx.end - tx.start), format_time(tx.end),
               float(tx.tx_power), float(rx), tx.outcome or "", pkt.pid, tx.attempt, target,
               tx.window, key in counted)


def device_rows(sim):
    """Per-device counts over the packets that enter the metrics."""
    specs = {s.id: s for s in sim.world.devices}
    for dev_id, dev in sim.devices.items():
        spec = specs[dev_id]
        pkts = [p for p in dev.packets if sim.counted(p)]
        hist = [0] * 9
        for p in pkts:
            if not p.dropped:
                hist[p.attempts] += 1
        yield (dev_id, spec.position.x, spec.position.y, spec.position.indoor,
               spec.position.wall_loss, 12 - dev.sf, dev.sf,
               "confirmed" if dev.confirmed else "unconfirmed", spec.period, spec.phase,
               dev.data_reply, len(pkts), sum(p.delivered for p in pkts),
               sum(p.acked for p in pkts), sum(p.dropped for p in pkts), *hist[1:9],
               sum(p.rx1_opened for p in pkts), sum(p.rx2_opened for p in pkts))


def gateway_rows(sim):
    for t, event, device, window, freq, sf, detail in sim.gateway.log:
        yield format_time(t), event, device, window, freq, sf, 12 - sf, detail


def window_rows(sim):
    for dev, ul, which, open_at, close_at, freq, sf, locked in sim.window_log or ():
        yield dev, ul, which, format_time(open_at), format_time(close_at), freq, sf, locked


def run_info(sim) -> dict:
    cfg = sim.cfg
    return {
        "seed": sim.seed,
        "cell_radius_m": sim.world.radius,
        "devices_in_coverage": len(sim.devices),
        "out_of_coverage": len(sim.world.out_of_coverage),
        "duration_s": format_time(sim.duration),
        "warmup_s": format_time(sim.warmup),
        "end_s": format_time(sim.end),
        "events": sim.engine.dispatched,
        "config": cfg.model_dump(mode="json"),
    }


def write_run(sim, out: Path) -> None:
    """Write the per-replication logs of a finished run into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "transmissions.csv", TRANSMISSION_FIELDS, transmission_rows(sim))
    write_rows(out / "devices.csv", DEVICE_FIELDS, device_rows(sim))
    write_rows(out / "gateway.csv", GATEWAY_FIELDS, gateway_rows(sim))
    if sim.window_log is not None:
        write_rows(out / "windows.csv", WINDOW_FIELDS, window_rows(sim))
    with open(out / "run.json", "w") as fh:
        json.dump(run_info(sim), fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_time(text: str) -> int:
    """Inverse of :func:`format_time`: exact integer nanoseconds."""
    neg = text.startswith("-")
    whole, _, frac = text.lstrip("-").partition(".")
    ns = int(whole) * 1_000_000_000 + int((frac + "000000000")[:9])
    return -ns if neg else ns

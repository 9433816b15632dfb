"""Post-hoc checks that read only the CSV logs of a run.

Nothing here calls into the simulator: duty-cycle spacing, window timing
and outcome conservation are recomputed from ``transmissions.csv``,
``windows.csv`` and ``run.json``.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .outputs import parse_time

# regulatory sub-bands as (carriers, duty cycle); kept separate from phyreg on purpose
SUBBANDS = {
    "g1": ({868_100_000, 868_300_000, 868_500_000}, Fraction(1, 100)),
    "g3": ({869_525_000}, Fraction(1, 10)),
}
GATEWAY = "-1"


def _band(freq: int) -> str:
    for name, (freqs, _) in SUBBANDS.items():
        if freq in freqs:
            return name
    raise ValueError(f"carrier {freq} outside the channel plan")


@dataclass
class AuditReport:
    run: str
    uplinks: int = 0
    downlinks: int = 0
    dc_violations: list[str] = field(default_factory=list)
    timing_violations: list[str] = field(default_factory=list)
    conservation_ok: bool = True
    windows_checked: int = 0

    @property
    def ok(self) -> bool:
        return self.conservation_ok and not self.dc_violations and not self.timing_violations

    def summary(self) -> str:
        state = "OK" if self.ok else "FAIL"
        return (f"{state} {self.run}: {self.uplinks} UL, {self.downlinks} DL, "
                f"{len(self.dc_violations)} duty-cycle violations, "
                f"{len(self.timing_violations)} timing violations, "
                f"{self.windows_checked} windows checked, "
                f"conservation {'ok' if self.conservation_ok else 'broken'}")


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def audit_duty_cycle(rows: list[dict[str, str]], include_gateway: bool) -> list[str]:
    """Every start must wait ``airtime / dc`` after the previous start in the
    same sub-band, and the cumulative share must stay within ``dc``."""
    per_owner: dict[tuple[str, str], list[tuple[int, int]]] = defaultdict(list)
    for r in rows:
        if r["sender"] == GATEWAY and not include_gateway:
            continue
        per_owner[(r["sender"], _band(int(r["frequency_hz"])))].append(
            (parse_time(r["start_s"]), parse_time(r["airtime_s"])))
    bad = []
    for (owner, band), txs in per_owner.items():
        dc = SUBBANDS[band][1]
        txs.sort()
        for (s0, a0), (s1, _) in zip(txs, txs[1:]):
            # next start >= s0 + a0 / dc, compared exactly
            if (s1 - s0) * dc.numerator < a0 * dc.denominator:
                bad.append(f"{owner}@{band}: start {s1} only {s1 - s0} ns after {s0} (airtime {a0})")
        first, (last_s, last_a) = txs[0][0], txs[-1]
        span = Fraction(last_s + last_a - first) + last_a * (1 / dc - 1)
        if span > 0 and sum(a for _, a in txs) / span > dc:
            bad.append(f"{owner}@{band}: cumulative share above {dc}")
    return bad


def audit_windows(tx_rows: list[dict[str, str]], win_rows: list[dict[str, str]],
                  rx1_delay: int, rx2_delay: int, max_attempts: int, end: int) -> tuple[list[str], int]:
    """Class-A timing: RX1 opens exactly ``rx1_delay`` after each uplink ends,
    RX2 exactly ``rx2_delay`` after, and RX2 is skipped only when RX1 brought
    an ACK or was still receiving when RX2 was due."""
    txs = {r["tx_id"]: r for r in tx_rows}
    wins: dict[str, dict[int, dict[str, str]]] = defaultdict(dict)
    for w in win_rows:
        wins[w["uplink_id"]][int(w["window"])] = w
    bad, checked = [], 0
    for r in tx_rows:
        if r["direction"] != "UL":
            continue
        if int(r["attempt"]) > max_attempts:
            bad.append(f"uplink {r['tx_id']} is attempt {r['attempt']} > {max_attempts}")
        ul_end = parse_time(r["end_s"])
        if ul_end + rx2_delay + 10**10 > end:
            continue  # windows may fall after the end of the run
        got = wins.get(r["tx_id"], {})
        rx1 = got.get(1)
        if rx1 is None:
            bad.append(f"uplink {r['tx_id']} has no RX1")
            continue
        checked += 1
        if parse_time(rx1["open_s"]) != ul_end + rx1_delay:
            bad.append(f"uplink {r['tx_id']}: RX1 at {rx1['open_s']}")
        rx2 = got.get(2)
        if rx2 is not None:
            checked += 1
            if parse_time(rx2["open_s"]) != ul_end + rx2_delay:
                bad.append(f"uplink {r['tx_id']}: RX2 at {rx2['open_s']}")
        locked = txs.get(rx1["locked_tx"])
        acked = (locked is not None and locked["direction"] == "DL"
                 and locked["target"] == r["sender"] and locked["outcome"] == "S")
        busy = locked is not None and parse_time(locked["end_s"]) > ul_end + rx2_delay
        if acked and rx2 is not None:
            bad.append(f"uplink {r['tx_id']}: RX2 opened after an RX1 ACK")
        if not acked and not busy and rx2 is None:
            bad.append(f"uplink {r['tx_id']}: RX2 missing")
    return bad, checked


def audit_run(run_dir: Path) -> AuditReport:
    run_dir = Path(run_dir)
    info = json.loads((run_dir / "run.json").read_text())
    cfg = info["config"]
    rows = read_csv(run_dir / "transmissions.csv")
    rep = AuditReport(str(run_dir))
    ul = [r for r in rows if r["direction"] == "UL"]
    rep.uplinks = len(ul)
    rep.downlinks = len(rows) - len(ul)
    tags = defaultdict(int)
    for r in ul:
        tags[r["outcome"]] += 1
    rep.conservation_ok = (set(tags) <= set("SUIRT")
                           and sum(tags[t] for t in "SUIRT") == len(ul))
    rep.dc_violations = audit_duty_cycle(rows, include_gateway=cfg["gateway"]["dc_enforced"])
    win_path = run_dir / "windows.csv"
    if win_path.exists():
        ns = 1_000_000_000
        rep.timing_violations, rep.windows_checked = audit_windows(
            rows, read_csv(win_path), round(cfg["mac"]["rx1_delay"] * ns),
            round(cfg["mac"]["rx2_delay"] * ns), cfg["mac"]["max_attempts"],
            parse_time(info["end_s"]))
    return rep


def find_runs(root: Path) -> list[Path]:
    root = Path(root)
    return sorted(p.parent for p in root.rglob("transmissions.csv"))

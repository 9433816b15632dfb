"""LoRa PHY arithmetic and EU868 regulation: data rates, sensitivities,
airtime, channel plan and per-sub-band duty-cycle budgets."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil

BANDWIDTH_HZ = 125_000


@dataclass(frozen=True)
class DataRate:
    index: int
    sf: int
    nominal_bitrate: float  # bit/s
    bandwidth: int = BANDWIDTH_HZ


DATA_RATES: dict[int, DataRate] = {
    5: DataRate(5, 7, 5470.0),
    4: DataRate(4, 8, 3125.0),
    3: DataRate(3, 9, 1760.0),
    2: DataRate(2, 10, 980.0),
    1: DataRate(1, 11, 440.0),
    0: DataRate(0, 12, 250.0),
}
DR_BY_SF: dict[int, DataRate] = {dr.sf: dr for dr in DATA_RATES.values()}
SPREADING_FACTORS = (7, 8, 9, 10, 11, 12)

GW_SENSITIVITY: dict[int, float] = {
    7: -130.0, 8: -132.5, 9: -135.0, 10: -137.5, 11: -140.0, 12: -142.5,
}
ED_SENSITIVITY: dict[int, float] = {
    7: -124.0, 8: -127.0, 9: -130.0, 10: -133.0, 11: -135.0, 12: -137.0,
}


def dr_for_sf(sf: int) -> DataRate:
    return DR_BY_SF[sf]


@dataclass(frozen=True)
class TransmissionParams:
    """Frame parameters entering the airtime formula.

    ``low_dr_optimize=None`` applies the usual rule (on for SF11/SF12 at
    125 kHz).
    """

    payload_bytes: int = 32
    explicit_header: bool = True
    code_rate: int = 2
    preamble_symbols: int = 8
    crc_on: bool = True
    low_dr_optimize: bool | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.payload_bytes <= 255:
            raise ValueError(f"payload_bytes out of range: {self.payload_bytes}")
        if not 1 <= self.code_rate <= 4:
            raise ValueError(f"code_rate must be 1..4, got {self.code_rate}")
        if self.preamble_symbols < 0:
            raise ValueError("preamble_symbols must be >= 0")


def symbol_time_ns(sf: int, bandwidth: int = BANDWIDTH_HZ) -> int:
    # 2^SF / 125 kHz = 2^SF * 8 us, exact in integer nanoseconds
    if bandwidth == BANDWIDTH_HZ:
        return SYMBOL_NS[sf]
    return (2 ** sf) * 1_000_000_000 // bandwidth


SYMBOL_NS: dict[int, int] = {sf: (2 ** sf) * 1_000_000_000 // BANDWIDTH_HZ for sf in range(5, 13)}


def payload_symbols(sf: int, p: TransmissionParams) -> int:
    de = p.low_dr_optimize if p.low_dr_optimize is not None else sf >= 11
    numerator = (8 * p.payload_bytes - 4 * sf + 28 + 16 * int(p.crc_on)
                 - 20 * int(not p.explicit_header))
    blocks = ceil(numerator / (4 * (sf - 2 * int(de))))
    return 8 + max(blocks * (p.code_rate + 4), 0)


def airtime_ns(sf: int, p: TransmissionParams) -> int:
    """Time on air in integer nanoseconds (exact at 125 kHz)."""
    # quarter-symbol units keep the 4.25-symbol preamble tail integral
    quarter_symbols = 4 * p.preamble_symbols + 17 + 4 * payload_symbols(sf, p)
    return quarter_symbols * symbol_time_ns(sf) // 4


def airtime(dr: DataRate, p: TransmissionParams) -> float:
    """Time on air in seconds."""
    return airtime_ns(dr.sf, p) / 1e9


@dataclass(frozen=True)
class SubBand:
    name: str
    frequencies: tuple[int, ...]  # Hz
    duty_cycle: float
    max_tx_power: float  # dBm
    downlink_only: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.duty_cycle <= 1:
            raise ValueError(f"duty cycle must be in (0, 1]: {self.duty_cycle}")


SHARED_SUBBAND = SubBand("shared", (868_100_000, 868_300_000, 868_500_000), 0.01, 14.0)
DOWNLINK_SUBBAND = SubBand("downlink", (869_525_000,), 0.10, 27.0, downlink_only=True)


class ChannelPlan:
    """EU868 default channels grouped by regulatory sub-band."""

    def __init__(self, subbands: tuple[SubBand, ...] = (SHARED_SUBBAND, DOWNLINK_SUBBAND)):
        self.subbands = subbands
        self._by_freq = {f: sb for sb in subbands for f in sb.frequencies}
        self.uplink_channels = tuple(
            f for sb in subbands if not sb.downlink_only for f in sb.frequencies)
        dl = [sb for sb in subbands if sb.downlink_only]
        self.rx2_frequency = dl[0].frequencies[0] if dl else self.uplink_channels[0]

    def subband_of(self, frequency: int) -> SubBand:
        try:
            return self._by_freq[frequency]
        except KeyError:
            raise ValueError(f"{frequency} Hz is not in the channel plan") from None

    def max_power(self, frequency: int) -> float:
        return self.subband_of(frequency).max_tx_power


DEFAULT_PLAN = ChannelPlan()


@lru_cache(maxsize=None)
def _off_ratio(duty_cycle: float) -> tuple[int, int]:
    dc = Fraction(str(duty_cycle))
    return dc.denominator - dc.numerator, dc.numerator


def off_time_ns(airtime: int, duty_cycle: float) -> int:
    """Silence imposed after a transmission: ``T * (1/dc - 1)``."""
    num, den = _off_ratio(duty_cycle)
    return airtime * num // den


def consume_duty_cycle(next_allowed: int, tx_start: int, airtime: int,
                       duty_cycle: float) -> int:
    """Return the new earliest start after transmitting ``airtime`` ns at
    ``tx_start``. A zero-length transmission leaves the budget untouched."""
    if tx_start < next_allowed:
        raise DutyCycleViolation(
            f"start {tx_start} precedes next allowed {next_allowed}")
    if airtime <= 0:
        return next_allowed
    return max(next_allowed, tx_start + airtime + off_time_ns(airtime, duty_cycle))


class DutyCycleViolation(RuntimeError):
    pass


class DutyCycleBudget:
    """Per-owner ledger of ``next_allowed`` per sub-band.

    With ``strict=True`` a premature start raises; otherwise it is counted
    and refused.
    """

    __slots__ = ("owner", "plan", "next_allowed", "enforced", "strict", "violations", "_band")

    def __init__(self, owner, plan: ChannelPlan = DEFAULT_PLAN,
                 enforced: bool = True, strict: bool = True):
        self.owner = owner
        self.plan = plan
        self.next_allowed: dict[str, int] = {sb.name: 0 for sb in plan.subbands}
        self.enforced = enforced
        self.strict = strict
        self.violations = 0
        self._band = {f: sb.name for f, sb in plan._by_freq.items()}

    def _name(self, frequency: int) -> str:
        try:
            return self._band[frequency]
        except KeyError:
            return self.plan.subband_of(frequency).name

    def earliest(self, frequency: int, now: int) -> int:
        if not self.enforced:
            return now
        t = self.next_allowed[self._name(frequency)]
        return t if t > now else now

    def allows(self, frequency: int, now: int) -> bool:
        return not self.enforced or now >= self.next_allowed[self._name(frequency)]

    def consume(self, frequency: int, tx_start: int, airtime: int) -> bool:
        if not self.enforced:
            return True
        sb = self.plan.subband_of(frequency)
        try:
            self.next_allowed[sb.name] = consume_duty_cycle(
                self.next_allowed[sb.name], tx_start, airtime, sb.duty_cycle)
        except DutyCycleViolation:
            if self.strict:
                raise
            self.violations += 1
            return False
        return True

"""Run configuration: TOML file with one table per block.

Every key is validated; unknown keys are rejected. See README for the full
key reference.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid or unreadable configuration (CLI exit code 2)."""


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


URBAN_PERIODS = ((86400.0, 0.40), (7200.0, 0.40), (3600.0, 0.15), (1800.0, 0.05))


class ScenarioConfig(_Block):
    kind: Literal["disc", "urban"] = "disc"
    n_devices: int = Field(1200, ge=1)
    cell_radius: float = Field(0.0, ge=0.0, description="metres; 0 = SF12 coverage radius")
    confirmed_fraction: float = Field(0.0, ge=0.0, le=1.0)
    aggregate_lambda: Optional[float] = Field(None, gt=0.0, description="pkt/s; disc mode")
    app_periods: Optional[list[tuple[float, float]]] = Field(
        None, description="[[period_s, fraction], ...]; default urban MAR mix")
    indoor_fraction: float = Field(0.7, ge=0.0, le=1.0)
    wall_losses: list[float] = Field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0])
    sim_duration: Optional[float] = Field(None, gt=0.0, description="s; default 24 h disc, 7 d urban")
    warmup: Optional[float] = Field(None, ge=0.0, description="s; default 10% of sim_duration")
    drain: float = Field(3600.0, ge=0.0, description="s simulated after sim_duration to settle exchanges")
    replications: int = Field(1, ge=1)
    master_seed: int = 1

    @field_validator("app_periods")
    @classmethod
    def _periods(cls, v):
        if v is None:
            return v
        if not v:
            raise ValueError("app_periods must not be empty")
        if any(p <= 0 or f < 0 for p, f in v):
            raise ValueError("periods must be > 0 and fractions >= 0")
        if abs(sum(f for _, f in v) - 1.0) > 1e-9:
            raise ValueError("app_periods fractions must sum to 1")
        return v

    @field_validator("wall_losses")
    @classmethod
    def _walls(cls, v):
        if not v or any(x < 0 for x in v):
            raise ValueError("wall_losses must be a non-empty list of values >= 0")
        return v

    @property
    def duration(self) -> float:
        if self.sim_duration is not None:
            return self.sim_duration
        return 86400.0 if self.kind == "disc" else 7 * 86400.0

    @property
    def warmup_s(self) -> float:
        return self.warmup if self.warmup is not None else 0.1 * self.duration

    def period_table(self) -> list[tuple[float, float]]:
        if self.app_periods is not None:
            return [tuple(x) for x in self.app_periods]
        if self.kind == "disc":
            lam = self.aggregate_lambda if self.aggregate_lambda is not None else 0.1
            return [(self.n_devices / lam, 1.0)]
        return list(URBAN_PERIODS)


class PhyConfig(_Block):
    payload_bytes: int = Field(32, ge=1, le=255)
    code_rate: int = Field(2, ge=1, le=4)
    preamble_symbols: int = Field(8, ge=0)
    explicit_header: bool = True
    uplink_crc: bool = True
    downlink_crc: bool = False
    ack_payload_bytes: int = Field(12, ge=0, le=255, description="PHY payload of a header-only DL frame")
    tx_power: float = 14.0


class MacConfig(_Block):
    max_attempts: int = 8
    backoff_min: float = Field(1.0, ge=0.0)
    backoff_max: float = Field(3.0, ge=0.0)
    rx1_delay: float = Field(1.0, gt=0.0)
    rx2_delay: float = Field(2.0, gt=0.0)
    window_symbols: int = Field(5, ge=1)
    mislock: bool = True

    @field_validator("max_attempts")
    @classmethod
    def _m(cls, v):
        if v not in (1, 2, 4, 6, 8):
            raise ValueError("max_attempts must be one of 1, 2, 4, 6, 8")
        return v

    @model_validator(mode="after")
    def _ordering(self):
        if self.backoff_min > self.backoff_max:
            raise ValueError("backoff_min > backoff_max")
        if self.rx2_delay <= self.rx1_delay:
            raise ValueError("rx2_delay must exceed rx1_delay")
        return self


class PropagationConfig(_Block):
    path_loss_exponent: float = Field(3.76, gt=0.0)
    reference_loss: float = 8.1
    reference_distance: float = Field(1.0, gt=0.0)
    shadowing_sigma: float = Field(6.0, ge=0.0)
    shadowing_correlation_distance: float = Field(110.0, gt=0.0)
    shadowing_enabled: bool = True
    buildings_enabled: bool = True


class CaptureConfig(_Block):
    co_sf_threshold: float = 6.0
    inter_sf_threshold: float = -16.0


class GatewayConfig(_Block):
    reception_paths: int = Field(8, ge=1)
    duplex: Literal["half", "full"] = "half"
    conflict_policy: Literal["tx_priority", "rx_priority", "dynamic"] = "tx_priority"
    dc_enforced: bool = True


class PolicyConfig(_Block):
    subband_swap: bool = False
    ack_data_rate: bool = False
    dl_payload_semantics: Literal["ack-only", "data-reply", "mixed"] = "ack-only"
    data_reply_fraction: float = Field(0.5, ge=0.0, le=1.0)


class Variant(_Block):
    name: str
    overrides: dict[str, Any] = Field(default_factory=dict)


class SweepConfig(_Block):
    axis: str = "lambda"
    points: list[Any] = Field(default_factory=list)
    variants: list[Variant] = Field(default_factory=list)


AXIS_ALIASES = {"lambda": "scenario.aggregate_lambda", "n_devices": "scenario.n_devices"}


class SimConfig(_Block):
    scenario: ScenarioConfig = ScenarioConfig()
    phy: PhyConfig = PhyConfig()
    mac: MacConfig = MacConfig()
    propagation: PropagationConfig = PropagationConfig()
    capture: CaptureConfig = CaptureConfig()
    gateway: GatewayConfig = GatewayConfig()
    policy: PolicyConfig = PolicyConfig()
    sweep: SweepConfig = SweepConfig()

    @classmethod
    def check_key(cls, dotted: str) -> tuple[str, str]:
        """Split a dotted key (or axis alias) into (block, field); unknown keys are fatal."""
        path = AXIS_ALIASES.get(dotted, dotted).split(".")
        if len(path) != 2 or path[0] not in cls.model_fields:
            raise ConfigError(f"unknown config key: {dotted}")
        block = cls.model_fields[path[0]].annotation
        if path[1] not in block.model_fields:
            raise ConfigError(f"unknown config key: {dotted}")
        return path[0], path[1]

    def with_overrides(self, overrides: dict[str, Any]) -> "SimConfig":
        data = self.model_dump()
        for dotted, value in overrides.items():
            block, name = self.check_key(dotted)
            data[block][name] = value
        return build_config(data)


def build_config(data: dict[str, Any]) -> SimConfig:
    try:
        return SimConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> SimConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return build_config(data)


def parse_override(text: str) -> tuple[str, Any]:
    """Parse ``key=value``; the value is read as a TOML literal, falling back
    to a bare string."""
    if "=" not in text:
        raise ConfigError(f"override must be key=value: {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value

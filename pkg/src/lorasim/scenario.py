"""Device placement, coverage filtering and traffic assignment for the disc
and urban reference scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channelmodel import LinkBudget, Position, ShadowingField, assign_data_rate, coverage_radius
from .config import ConfigError, PropagationConfig, SimConfig
from .simcore import RngStream, draw_uniform


@dataclass
class DeviceSpec:
    id: int
    position: Position
    sf: int
    confirmed: bool
    period: float
    phase: float
    data_reply: bool


@dataclass
class World:
    radius: float
    propagation: PropagationConfig
    links: LinkBudget
    devices: list[DeviceSpec]
    out_of_coverage: list[int] = field(default_factory=list)

    @property
    def dr_counts(self) -> dict[int, int]:
        counts = {sf: 0 for sf in range(7, 13)}
        for d in self.devices:
            counts[d.sf] += 1
        return counts


def effective_propagation(cfg: SimConfig) -> PropagationConfig:
    prop = cfg.propagation
    if cfg.scenario.kind == "disc":
        # the disc scenario is path loss only
        return prop.model_copy(update={"shadowing_enabled": False, "buildings_enabled": False})
    return prop


def cell_radius(cfg: SimConfig) -> float:
    if cfg.scenario.cell_radius > 0:
        return cfg.scenario.cell_radius
    return coverage_radius(cfg.propagation, cfg.phy.tx_power)


def place_device(i: int, seed: int, radius: float, cfg: SimConfig, buildings: bool) -> Position:
    rng = RngStream(seed, "placement", i)
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    indoor = buildings and rng.random() < cfg.scenario.indoor_fraction
    wall = rng.choice(cfg.scenario.wall_losses) if indoor else 0.0
    return Position(r * math.cos(theta), r * math.sin(theta), indoor, float(wall))


def build_scenario(cfg: SimConfig, seed: int) -> World:
    sc = cfg.scenario
    prop = effective_propagation(cfg)
    radius = cell_radius(cfg)
    positions = {i: place_device(i, seed, radius, cfg, prop.buildings_enabled)
                 for i in range(sc.n_devices)}
    sigma = prop.shadowing_sigma if prop.shadowing_enabled else 0.0
    field_ = ShadowingField(sigma, prop.shadowing_correlation_distance, radius,
                            RngStream(seed, "shadowing"))
    links = LinkBudget(prop, Position(0.0, 0.0), positions, field_)

    table = sc.period_table()
    specs, excluded = [], []
    for i in range(sc.n_devices):
        dr = assign_data_rate(cfg.phy.tx_power - links.gateway_loss(i))
        if dr is None:
            excluded.append(i)
            continue
        rng = RngStream(seed, "traffic", i)
        confirmed = rng.random() < sc.confirmed_fraction
        u = rng.random()
        period = table[-1][0]
        acc = 0.0
        for p, frac in table:
            acc += frac
            if u < acc:
                period = p
                break
        phase = draw_uniform(rng, 0.0, period)
        sem = cfg.policy.dl_payload_semantics
        reply_draw = rng.random()
        data_reply = sem == "data-reply" or (sem == "mixed" and reply_draw < cfg.policy.data_reply_fraction)
        specs.append(DeviceSpec(i, positions[i], dr.sf, confirmed, period, phase, data_reply))
    if not specs:
        raise ConfigError("no device lies within coverage")
    return World(radius, prop, links, specs, excluded)

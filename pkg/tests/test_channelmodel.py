import math

import numpy as np
import pytest

from lorasim.channelmodel import (LinkBudget, Position, ShadowingField, assign_data_rate,
                                  coverage_radius, path_loss, sample_shadowing)
from lorasim.config import PropagationConfig
from lorasim.phyreg import GW_SENSITIVITY
from lorasim.simcore import RngStream

CFG = PropagationConfig()


def test_path_loss_reference_and_decade():
    assert path_loss(CFG.reference_distance, CFG) == pytest.approx(CFG.reference_loss)
    assert path_loss(1000.0, CFG) - path_loss(100.0, CFG) == pytest.approx(37.6)


def test_path_loss_zero_distance_clamped():
    assert path_loss(0.0, CFG) == pytest.approx(CFG.reference_loss)


def test_path_loss_1500m_by_hand():
    # 8.1 + 37.6 * log10(1500) = 8.1 + 37.6 * 3.176091 = 127.52 dB, inside the 144 dB SF7 budget
    assert path_loss(1500.0, CFG) == pytest.approx(127.521, abs=1e-3)
    assert path_loss(1500.0, CFG) < 14.0 - GW_SENSITIVITY[7]


def test_coverage_radius_closes_sf12_ed_budget():
    r = coverage_radius(CFG, 14.0)
    assert path_loss(r, CFG) == pytest.approx(14.0 + 137.0)


def test_zero_sigma_field_is_flat():
    f = ShadowingField(0.0, 110.0, 1000.0)
    assert f.value(10.0, -300.0) == 0.0
    assert sample_shadowing(Position(5.0, 5.0), f) == 0.0


def test_colocated_points_identical_and_frozen():
    f = ShadowingField(6.0, 110.0, 2000.0, RngStream(4, "shadowing"))
    a = f.value(123.4, -567.8)
    assert f.value(123.4, -567.8) == a
    assert sample_shadowing(Position(123.4, -567.8, True, 20.0), f) == a


def test_shadowing_std_within_5_percent():
    sigma = 6.0
    f = ShadowingField(sigma, 110.0, 6000.0, RngStream(9, "shadowing"))
    rng = np.random.default_rng(0)
    pts = rng.uniform(-5900, 5900, size=(10_000, 2))
    vals = np.array([f.value(x, y) for x, y in pts])
    assert abs(vals.std() - sigma) < 0.05 * sigma
    assert abs(vals.mean()) < 0.5


def test_shadowing_correlation_decays_exponentially():
    corr = 110.0
    rho = {d: [] for d in (55.0, 110.0, 330.0)}
    rng = np.random.default_rng(1)
    for seed in range(6):
        f = ShadowingField(1.0, corr, 3000.0, RngStream(seed, "shadowing"))
        base = rng.uniform(-2500, 2500, size=(1500, 2))
        ang = rng.uniform(0, 2 * math.pi, size=1500)
        a = np.array([f.value(x, y) for x, y in base])
        for d in rho:
            b = np.array([f.value(x + d * math.cos(t), y + d * math.sin(t))
                          for (x, y), t in zip(base, ang)])
            rho[d].append(np.corrcoef(a, b)[0, 1])
    for d, vals in rho.items():
        assert np.mean(vals) == pytest.approx(math.exp(-d / corr), abs=0.08)


def test_link_budget_symmetric_with_walls():
    f = ShadowingField(6.0, 110.0, 2000.0, RngStream(2, "shadowing"))
    devs = {0: Position(100.0, 0.0, True, 20.0), 1: Position(-400.0, 300.0), 2: Position(0.0, 900.0)}
    lb = LinkBudget(CFG, Position(0.0, 0.0), devs, f)
    for a in (-1, 0, 1, 2):
        for b in (-1, 0, 1, 2):
            assert lb.loss(a, b) == lb.loss(b, a)
    assert lb.gateway_loss(0) == pytest.approx(path_loss(100.0, CFG) + lb.shadowing(0) + 20.0)
    d01 = devs[0].distance(devs[1])
    assert lb.loss(0, 1) == pytest.approx(
        path_loss(d01, CFG) + 0.5 * (lb.shadowing(0) + lb.shadowing(1)) + 20.0)


@pytest.mark.parametrize("rx, sf", [(-120.0, 7), (-124.0, 7), (-126.0, 8), (-133.0, 10),
                                    (-136.9, 12), (-137.0, 12)])
def test_assign_data_rate(rx, sf):
    assert assign_data_rate(rx).sf == sf


def test_assign_data_rate_out_of_coverage():
    assert assign_data_rate(-138.0) is None

"""Propagation: log-distance path loss, spatially correlated log-normal
shadowing, building penetration and per-device data-rate assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PropagationConfig
from .phyreg import DR_BY_SF, ED_SENSITIVITY, SPREADING_FACTORS, DataRate
from .simcore import RngStream


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    indoor: bool = False
    wall_loss: float = 0.0

    def __post_init__(self) -> None:
        if self.wall_loss < 0:
            raise ValueError("wall_loss must be >= 0")

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def path_loss(distance: float, cfg: PropagationConfig) -> float:
    """Log-distance loss in dB; distances below the reference are clamped."""
    d = max(distance, cfg.reference_distance)
    return cfg.reference_loss + 10.0 * cfg.path_loss_exponent * math.log10(d / cfg.reference_distance)


def max_distance(budget_db: float, cfg: PropagationConfig) -> float:
    """Distance at which path loss equals ``budget_db``."""
    return cfg.reference_distance * 10 ** ((budget_db - cfg.reference_loss) / (10.0 * cfg.path_loss_exponent))


def coverage_radius(cfg: PropagationConfig, tx_power: float,
                    sensitivity: dict[int, float] = ED_SENSITIVITY) -> float:
    """Radius where the SF12 link budget closes under path loss alone."""
    return max_distance(tx_power - sensitivity[12], cfg)


class ShadowingField:
    """Frozen zero-mean Gaussian field with covariance ``sigma^2 exp(-d/L)``.

    The field is drawn on a regular grid by circulant embedding and read at
    arbitrary points by bilinear interpolation, renormalised so every point
    has variance ``sigma^2`` exactly.
    """

    def __init__(self, sigma: float, correlation_distance: float, half_extent: float,
                 stream: RngStream | None = None, spacing: float | None = None):
        self.sigma = float(sigma)
        self.corr = float(correlation_distance)
        if self.sigma == 0.0:
            self._grid = None
            return
        if stream is None:
            raise ValueError("a random stream is required when sigma > 0")
        # a fine grid keeps interpolation smoothing small at short lags
        self.spacing = spacing or self.corr / 8.0
        n = int(math.ceil(2 * half_extent / self.spacing)) + 2
        self.origin = -half_extent - self.spacing
        self.n = n
        rng = np.random.default_rng(stream.numpy_seed())
        self._grid = self._circulant_field(n, rng)
        s = self.spacing
        self._rho1 = math.exp(-s / self.corr)
        self._rho2 = math.exp(-s * math.sqrt(2.0) / self.corr)

    def _circulant_field(self, n: int, rng: np.random.Generator) -> np.ndarray:
        m = 2 * n
        idx = np.arange(m)
        lag = np.minimum(idx, m - idx) * self.spacing
        dist = np.hypot(lag[:, None], lag[None, :])
        cov = np.exp(-dist / self.corr)
        eig = np.fft.fft2(cov).real
        eig[eig < 0] = 0.0
        noise = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        field = np.fft.fft2(np.sqrt(eig / (m * m)) * noise).real
        return np.ascontiguousarray(field[:n, :n])

    def value(self, x: float, y: float) -> float:
        if self._grid is None:
            return 0.0
        gx = (x - self.origin) / self.spacing
        gy = (y - self.origin) / self.spacing
        i = min(max(int(math.floor(gx)), 0), self.n - 2)
        j = min(max(int(math.floor(gy)), 0), self.n - 2)
        fx = min(max(gx - i, 0.0), 1.0)
        fy = min(max(gy - j, 0.0), 1.0)
        w00 = (1 - fx) * (1 - fy)
        w10 = fx * (1 - fy)
        w01 = (1 - fx) * fy
        w11 = fx * fy
        g = self._grid
        z = w00 * g[i, j] + w10 * g[i + 1, j] + w01 * g[i, j + 1] + w11 * g[i + 1, j + 1]
        r1, r2 = self._rho1, self._rho2
        var = (w00 * w00 + w10 * w10 + w01 * w01 + w11 * w11
               + 2 * r1 * (w00 * w10 + w00 * w01 + w10 * w11 + w01 * w11)
               + 2 * r2 * (w00 * w11 + w10 * w01))
        return self.sigma * float(z) / math.sqrt(var)


def sample_shadowing(position: Position, field: ShadowingField) -> float:
    return field.value(position.x, position.y)


class LinkBudget:
    """Symmetric link losses between the gateway (id -1) and devices.

    Device-to-device shadowing is the mean of both endpoints' field values;
    wall losses add for each indoor endpoint.
    """

    GATEWAY = -1

    def __init__(self, cfg: PropagationConfig, gateway: Position,
                 devices: dict[int, Position], field: ShadowingField):
        self.cfg = cfg
        self.gateway = gateway
        self.positions = devices
        self.field = field
        self._shadow = {i: field.value(p.x, p.y) for i, p in devices.items()}
        self._gw_loss = {i: self._pair(gateway, 0.0, p, self._shadow[i]) for i, p in devices.items()}
        self._cache: dict[tuple[int, int], float] = {}

    def _pair(self, a: Position, sa: float, b: Position, sb: float) -> float:
        return path_loss(a.distance(b), self.cfg) + sa + sb + a.wall_loss + b.wall_loss

    def shadowing(self, dev: int) -> float:
        return self._shadow[dev]

    def loss(self, a: int, b: int) -> float:
        if a == b:
            return 0.0
        if a == self.GATEWAY:
            return self._gw_loss[b]
        if b == self.GATEWAY:
            return self._gw_loss[a]
        key = (a, b) if a < b else (b, a)
        cached = self._cache.get(key)
        if cached is None:
            pa, pb = self.positions[key[0]], self.positions[key[1]]
            cached = self._pair(pa, 0.5 * self._shadow[key[0]], pb, 0.5 * self._shadow[key[1]])
            self._cache[key] = cached
        return cached

    def gateway_loss(self, dev: int) -> float:
        return self._gw_loss[dev]


def assign_data_rate(rx_power: float,
                     sensitivity: dict[int, float] = ED_SENSITIVITY) -> DataRate | None:
    """Highest data rate whose sensitivity is met, or None if out of coverage.

    ``rx_power`` equal to the threshold passes.
    """
    for sf in SPREADING_FACTORS:
        if rx_power >= sensitivity[sf]:
            return DR_BY_SF[sf]
    return None

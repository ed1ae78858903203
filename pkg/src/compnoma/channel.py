"""Radio parameters, path loss and small-scale fading.

All gains in this package are normalized against the in-band noise power
(noise density x full system bandwidth), so a user's received SNR over the
full band is simply transmit_power_mW x gain.  Gains carry units of 1/mW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .errors import DomainError


@dataclass(frozen=True)
class RadioParams:
    """Link-budget constants shared by every cell of a coordination set.

    tx_power_mw:        per-cell transmit power budget, mW
    noise_density_mw_hz: noise power spectral density, mW/Hz
    bandwidth_hz:       full system (multiplexing) bandwidth, Hz
    pathloss_exponent:  distance power-law exponent
    sic_tolerance:      minimum noise-normalized received-power gap between a
                        decoded signal and the not-yet-decoded rest (linear
                        ratio, dimensionless)
    """

    tx_power_mw: float
    noise_density_mw_hz: float
    bandwidth_hz: float
    pathloss_exponent: float = 4.0
    sic_tolerance: float = 100.0

    def __post_init__(self) -> None:
        if self.tx_power_mw <= 0.0:
            raise DomainError(f"tx_power_mw must be positive, got {self.tx_power_mw}")
        if self.noise_density_mw_hz <= 0.0:
            raise DomainError("noise_density_mw_hz must be positive")
        if self.bandwidth_hz <= 0.0:
            raise DomainError("bandwidth_hz must be positive")
        if self.pathloss_exponent <= 0.0:
            raise DomainError("pathloss_exponent must be positive")
        if self.sic_tolerance < 0.0:
            raise DomainError("sic_tolerance cannot be negative")

    @property
    def noise_power_mw(self) -> float:
        """In-band noise power over the full system bandwidth, mW."""
        return self.noise_density_mw_hz * self.bandwidth_hz


def normalized_gain(distance_m: float, fading_power: float, params: RadioParams) -> float:
    """Noise-normalized channel power gain, 1/mW.

    gain = fading_power * distance^(-alpha) / (noise_density * bandwidth)

    fading_power is the squared fading envelope (unit mean under Rayleigh);
    fading_power = 0 degenerates to a zero gain, not an error.
    """
    if distance_m <= 0.0:
        raise DomainError(f"distance must be positive, got {distance_m}")
    if fading_power < 0.0:
        raise DomainError(f"fading power cannot be negative, got {fading_power}")
    return fading_power * distance_m ** (-params.pathloss_exponent) / params.noise_power_mw


@dataclass(frozen=True)
class ChannelRealization:
    """One trial's gain table, keyed by (cell_id, user_id)."""

    gains: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.gains[key]

    def __contains__(self, key: tuple[int, int]) -> bool:
        return key in self.gains


def draw_realization(topology, rng) -> ChannelRealization:
    """Draw one i.i.d. Rayleigh realization for every (cell, user) link.

    The squared envelope is Exp(1) (unit-variance complex Gaussian amplitude).
    Links are drawn in (cell_id, user_id) sorted order so a given stream state
    always produces the same table.
    """
    params = topology.radio
    noise = params.noise_power_mw
    alpha = params.pathloss_exponent
    expovariate = rng.expovariate
    gains: dict[tuple[int, int], float] = {}
    for cell in topology.cells:
        cx, cy = cell.position
        for user in topology.users:
            ux, uy = user.position
            d = math.hypot(ux - cx, uy - cy)
            if d <= 0.0:
                raise DomainError(f"user {user.user_id} is on top of cell {cell.cell_id}")
            gains[(cell.cell_id, user.user_id)] = (
                expovariate(1.0) * d ** (-alpha) / noise
            )
    return ChannelRealization(gains)

"""Simulation scenarios and user drop models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..arrays import RegionSpec, default_d_min, subarray_offsets
from ..channel import UserChannel
from ..exceptions import BadDistributionParams

__all__ = [
    "SPEED_OF_LIGHT",
    "DISTRIBUTIONS",
    "Scenario",
    "dbm_to_mw",
    "mw_to_dbm",
    "hotspot_centers",
    "sample_users",
    "sample_realizations",
]

SPEED_OF_LIGHT = 299792458.0
DISTRIBUTIONS = ("annulus", "ring", "hotspots")

_DIST_DEFAULTS = {
    "annulus": {"r_min": 5.0, "r_max": 50.0},
    "ring": {"r_min": 24.9, "r_max": 25.1},
    "hotspots": {"hotspot_x": 25.0, "hotspot_z": 40.0, "hotspot_radius": 2.5},
}


def dbm_to_mw(dbm):
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


@dataclass(frozen=True)
class Scenario:
    """Physical parameters of one experiment.

    Powers are given in dBm; ``power`` and ``noise`` return milliwatts.
    ``wavelength=None`` means ``c / carrier_hz``. ``side_A`` is the side of
    the moving region in meters and ``d_min=None`` picks the smallest
    spacing that keeps neighboring subarrays from overlapping.
    """

    M: int = 64
    K: int = 32
    nx: int = 1
    ny: int = 1
    carrier_hz: float = 30e9
    wavelength_override: float | None = None
    power_dbm: float = 20.0
    noise_dbm: float = -80.0
    side_A: float | None = None
    d_min_override: float | None = None
    bs_height: float = 15.0
    distribution: str = "annulus"
    dist_params: dict = field(default_factory=dict)
    nlos: int = 0
    nlos_gain: float = 0.3

    def __post_init__(self):
        for name in ("M", "K", "nx", "ny"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.carrier_hz > 0:
            raise ValueError("carrier_hz must be positive")
        if self.wavelength_override is not None and not self.wavelength_override > 0:
            raise ValueError("wavelength must be positive")
        if self.side_A is not None and not self.side_A > 0:
            raise ValueError("side_A must be positive")
        if not self.bs_height > 0:
            raise ValueError("bs_height must be positive")
        if self.nlos < 0:
            raise ValueError("nlos must be >= 0")
        if not self.nlos_gain >= 0:
            raise ValueError("nlos_gain must be >= 0")
        self.params()  # validates the distribution

    @property
    def wavelength(self) -> float:
        if self.wavelength_override is not None:
            return float(self.wavelength_override)
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def power(self) -> float:
        return float(dbm_to_mw(self.power_dbm))

    @property
    def noise(self) -> float:
        return float(dbm_to_mw(self.noise_dbm))

    @property
    def N(self) -> int:
        return self.nx * self.ny

    @property
    def region(self) -> RegionSpec:
        side = 100 * self.wavelength if self.side_A is None else self.side_A
        d_min = (default_d_min(self.wavelength, self.nx, self.ny)
                 if self.d_min_override is None else self.d_min_override)
        return RegionSpec(side, d_min)

    @property
    def offsets(self) -> np.ndarray:
        return subarray_offsets(self.nx, self.ny, self.wavelength)

    def params(self) -> dict:
        """Distribution parameters with defaults filled in and range-checked."""
        if self.distribution not in DISTRIBUTIONS:
            raise BadDistributionParams(
                f"unknown distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}")
        p = dict(_DIST_DEFAULTS[self.distribution])
        unknown = set(self.dist_params) - set(p)
        if unknown:
            raise BadDistributionParams(
                f"parameters {sorted(unknown)} do not apply to {self.distribution}")
        p.update({k: float(v) for k, v in self.dist_params.items()})
        if self.distribution in ("annulus", "ring"):
            if not 0 <= p["r_min"] <= p["r_max"] or p["r_max"] <= 0:
                raise BadDistributionParams(
                    f"need 0 <= r_min <= r_max and r_max > 0, got {p['r_min']}, {p['r_max']}")
        else:
            if not p["hotspot_radius"] > 0 or not p["hotspot_z"] > 0:
                raise BadDistributionParams("hotspot radius and range must be positive")
        return p


def hotspot_centers(scenario: Scenario) -> np.ndarray:
    """3D centers of the two hotspots, left one first."""
    p = scenario.params()
    y = -scenario.bs_height
    return np.array([[-p["hotspot_x"], y, p["hotspot_z"]], [p["hotspot_x"], y, p["hotspot_z"]]])


def _ground_points(scenario: Scenario, rng: np.random.Generator, n: int) -> np.ndarray:
    p = scenario.params()
    y = -scenario.bs_height
    if scenario.distribution in ("annulus", "ring"):
        # uniform over the area of the front half-annulus
        r = np.sqrt(rng.uniform(p["r_min"] ** 2, p["r_max"] ** 2, size=n))
        th = rng.uniform(0.0, np.pi, size=n)
        return np.column_stack([r * np.cos(th), np.full(n, y), r * np.sin(th)])
    centers = hotspot_centers(scenario)
    first = (n + 1) // 2
    which = np.r_[np.zeros(first, int), np.ones(n - first, int)]
    r = p["hotspot_radius"] * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0.0, 2 * np.pi, size=n)
    c = centers[which]
    return np.column_stack([c[:, 0] + r * np.cos(th), c[:, 1], c[:, 2] + r * np.sin(th)])


def sample_users(scenario: Scenario, rng: np.random.Generator) -> list[UserChannel]:
    """Draw ``K`` users on the ground plane ``y = -bs_height``.

    The LoS coefficient has amplitude ``lambda / (4 pi ||s||)`` and a uniform
    phase. Each of the ``nlos`` scatterers is drawn from the same ground
    distribution, lifted to a uniform height between the ground and the
    array, and gets amplitude ``nlos_gain * lambda / (4 pi (d_1 + d_2))``
    with ``d_1, d_2`` the array-scatterer and scatterer-user distances.
    """
    lam = scenario.wavelength
    K, L = scenario.K, scenario.nlos
    pos = _ground_points(scenario, rng, K)
    phase = rng.uniform(0.0, 2 * np.pi, size=(K, L + 1))
    users = []
    for k in range(K):
        s0 = pos[k]
        anchors = [s0]
        amps = [lam / (4 * np.pi * np.linalg.norm(s0))]
        if L:
            sc = _ground_points(scenario, rng, L)
            sc[:, 1] = -scenario.bs_height * rng.uniform(size=L)
            for s in sc:
                d = np.linalg.norm(s) + np.linalg.norm(s - s0)
                anchors.append(s)
                amps.append(scenario.nlos_gain * lam / (4 * np.pi * d))
        users.append(UserChannel(np.array(anchors), np.array(amps) * np.exp(1j * phase[k])))
    return users


def sample_realizations(scenario: Scenario, rng: np.random.Generator,
                        n: int) -> list[list[UserChannel]]:
    return [sample_users(scenario, rng) for _ in range(n)]

"""Exact optimality conditions for single-path users with single-element subarrays.

With one path per user and ``N = 1`` every channel entry has the same modulus,
so the max-min bound is attained exactly when the per-subarray path
differences ``||t - s_1|| - ||t - s_2||`` have the right fractional parts (in
wavelengths). For SDMA the unit phasors of those fractional parts must sum to
zero (orthogonal channels); for OFDMA they must all be equal (parallel
channels). Points with a prescribed path difference lie on hyperbola
branches with the two users as foci, which the constructors below locate by
1D root finding along rays from the region center.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .arrays import RegionSpec
from .channel import ArrayGeometry, UserChannel, channel_matrix
from .exceptions import Infeasible, Unsupported

__all__ = [
    "PathDiffDecomposition",
    "CertificationReport",
    "decompose",
    "path_difference",
    "check_digital_condition",
    "check_analog_condition",
    "construct_digital_apv",
    "construct_analog_apv",
]

_N_RAYS = 180
_N_SAMPLES = 400


@dataclass(frozen=True)
class PathDiffDecomposition:
    delta: float
    n: int
    phi: float


def decompose(delta: float, wavelength: float) -> PathDiffDecomposition:
    """Split a path difference into whole wavelengths and a fraction in ``[0, 1)``."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    q = delta / wavelength
    n = math.floor(q)
    phi = q - n
    if phi >= 1.0:  # q just below an integer can round up
        n, phi = n + 1, 0.0
    return PathDiffDecomposition(float(delta), int(n), float(phi))


@dataclass
class CertificationReport:
    """Outcome of an optimality check with per-pair residuals."""

    passed: bool
    tol: float
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "passed": self.passed,
            "tol": self.tol,
            "residuals": [{"users": list(k), "residual": v}
                          for k, v in sorted(self.residuals.items())],
        }, indent=2)


def _single_path_sources(geom: ArrayGeometry, users: Sequence[UserChannel]) -> np.ndarray:
    if geom.N != 1 or np.any(geom.offsets != 0):
        raise Unsupported("closed-form conditions need single-element subarrays (N = 1)")
    if any(u.n_paths != 1 for u in users):
        raise Unsupported("closed-form conditions need exactly one path per user")
    return np.array([u.anchors[0] for u in users])


def path_difference(points2d, s1, s2) -> np.ndarray:
    """``||t - s1|| - ||t - s2||`` for in-plane points ``t = (x, y, 0)``."""
    p = np.asarray(points2d, dtype=float)
    p3 = np.concatenate([p, np.zeros(p.shape[:-1] + (1,))], axis=-1)
    return (np.linalg.norm(p3 - np.asarray(s1), axis=-1)
            - np.linalg.norm(p3 - np.asarray(s2), axis=-1))


def check_digital_condition(geom: ArrayGeometry, users: Sequence[UserChannel],
                            wavelength: float, tol: float | None = None) -> CertificationReport:
    """Orthogonality test for every unordered user pair.

    The residual of pair ``(k, j)`` is ``|sum_m exp(j 2 pi phi_m)|`` with
    ``phi_m`` the fractional path difference of subarray ``m``; it equals
    ``|h_k^H h_j| / (|b_k| |b_j|)``.
    """
    src = _single_path_sources(geom, users)
    tol = 1e-8 * geom.M if tol is None else tol
    res = {}
    for k, j in itertools.combinations(range(len(users)), 2):
        delta = path_difference(geom.centers, src[k], src[j])
        phi = np.array([decompose(d, wavelength).phi for d in delta])
        res[(k, j)] = float(abs(np.exp(2j * np.pi * phi).sum()))
    return CertificationReport(all(v <= tol for v in res.values()), tol, res)


def check_analog_condition(geom: ArrayGeometry, users: Sequence[UserChannel],
                           wavelength: float, tol: float = 1e-10) -> CertificationReport:
    """Parallel-channel test: ``|h_k^H h_1| / (||h_k|| ||h_1||) = 1`` for every ``k >= 2``.

    Residuals are ``1 - correlation``.
    """
    _single_path_sources(geom, users)
    H = channel_matrix(geom, users, wavelength)
    norms = np.linalg.norm(H, axis=0)
    res = {}
    for k in range(1, len(users)):
        corr = abs(np.vdot(H[:, k], H[:, 0])) / (norms[k] * norms[0])
        res[(0, k)] = float(1.0 - corr)
    return CertificationReport(all(v <= tol for v in res.values()), tol, res)


class _LocusFinder:
    """Locate in-region points on level sets of the path difference."""

    def __init__(self, s1, s2, half):
        self.s1, self.s2, self.half = np.asarray(s1, float), np.asarray(s2, float), half
        theta = np.arange(_N_RAYS) * (2 * np.pi / _N_RAYS)
        self.dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        self.rmax = half / np.max(np.abs(self.dirs), axis=1)
        frac = np.linspace(0.0, 1.0, _N_SAMPLES)
        self.r = frac[None, :] * self.rmax[:, None]
        pts = self.r[..., None] * self.dirs[:, None, :]
        self.f = path_difference(pts, self.s1, self.s2)

    @property
    def value_range(self):
        return float(self.f.min()), float(self.f.max())

    def _f_ray(self, i, r):
        return float(path_difference(r * self.dirs[i], self.s1, self.s2))

    def points_on(self, level: float):
        """Crossings of ``f = level``, ordered by ray and then by distance from the center."""
        out = []
        g = self.f - level
        for i in range(_N_RAYS):
            gi = g[i]
            exact = np.flatnonzero(gi == 0)
            cross = np.flatnonzero(np.signbit(gi[:-1]) != np.signbit(gi[1:]))
            for idx in sorted(set(exact.tolist()) | set(cross.tolist())):
                if gi[idx] == 0:
                    r = self.r[i, idx]
                else:
                    r = brentq(lambda rr: self._f_ray(i, rr) - level,
                               self.r[i, idx], self.r[i, idx + 1], xtol=1e-12, rtol=1e-15)
                out.append(r * self.dirs[i])
        return out


def _place(levels_per_slot, finder, M, d_min):
    placed = []
    for levels in levels_per_slot:
        found = None
        for level in levels:
            for p in finder.points_on(level):
                if np.all(np.abs(p) <= finder.half) and all(
                        np.hypot(*(p - q)) >= d_min for q in placed):
                    found = p
                    break
            if found is not None:
                break
        if found is None:
            raise Infeasible(f"could only place {len(placed)} of {M} subarrays")
        placed.append(found)
    return np.array(placed)


def _levels(finder, phi, wavelength):
    """All reachable ``wavelength * (n + phi)``, nearest to the center value first."""
    lo, hi = finder.value_range
    f0 = float(path_difference(np.zeros(2), finder.s1, finder.s2))
    n_lo = math.ceil(lo / wavelength - phi)
    n_hi = math.floor(hi / wavelength - phi)
    levels = [wavelength * (n + phi) for n in range(n_lo, n_hi + 1)]
    return sorted(levels, key=lambda v: (abs(v - f0), v))


def _two_sources(users, M):
    if len(users) != 2:
        raise Unsupported("explicit construction is implemented for K = 2 only")
    if any(u.n_paths != 1 for u in users):
        raise Unsupported("explicit construction needs single-path users")
    if M < 1:
        raise ValueError("M must be positive")
    return users[0].anchors[0], users[1].anchors[0]


def construct_digital_apv(users: Sequence[UserChannel], M: int, region: RegionSpec,
                          wavelength: float) -> ArrayGeometry:
    """Place ``M`` subarrays so that the two users' channels are orthogonal.

    Subarray ``m`` is put on a hyperbola whose path difference has fractional
    part ``m / M`` (mod 1); these phasors sum to zero for ``M >= 2``.
    """
    s1, s2 = _two_sources(users, M)
    if M < 2:
        raise Infeasible("a single subarray cannot make two channels orthogonal")
    finder = _LocusFinder(s1, s2, region.half)
    slots = [_levels(finder, (m / M) % 1.0, wavelength) for m in range(1, M + 1)]
    centers = _place(slots, finder, M, region.d_min)
    return ArrayGeometry(centers, np.zeros((1, 2)), region.half, region.d_min)


def construct_analog_apv(users: Sequence[UserChannel], M: int, region: RegionSpec,
                         wavelength: float) -> ArrayGeometry:
    """Place ``M`` subarrays on hyperbolas sharing one fractional path difference.

    The common fraction is taken from the region center, so the first
    subarray normally sits at the center itself.
    """
    s1, s2 = _two_sources(users, M)
    finder = _LocusFinder(s1, s2, region.half)
    phi = decompose(float(path_difference(np.zeros(2), s1, s2)), wavelength).phi
    levels = _levels(finder, phi, wavelength)
    centers = _place([levels] * M, finder, M, region.d_min)
    return ArrayGeometry(centers, np.zeros((1, 2)), region.half, region.d_min)

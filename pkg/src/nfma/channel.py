"""Spherical-wave (near-field) channel model for movable subarrays.

Array elements live in the x-y plane (z = 0); users and scatterers sit at
arbitrary 3D points. Each path contributes a unit-modulus phase term whose
argument is proportional to the exact element-to-anchor distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DimensionMismatch, ZeroDistance

__all__ = [
    "UserChannel",
    "ArrayGeometry",
    "element_positions",
    "nfrv",
    "channel_gain",
    "channel_vector",
    "channel_matrix",
    "channel_jacobian",
]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UserChannel:
    """Path geometry and complex path coefficients of one user.

    Parameters
    ----------
    anchors : array_like, shape (L, 3)
        Path anchor points in meters. By convention row 0 is the user
        itself (LoS path) and the remaining rows are scatterers. A user
        without LoS simply omits the user row.
    prv : array_like, shape (L,)
        Complex path response coefficients, referenced to the array origin.
    """

    anchors: np.ndarray
    prv: np.ndarray

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        prv = np.atleast_1d(np.asarray(self.prv, dtype=complex))
        if anchors.ndim != 2 or anchors.shape[1] != 3:
            raise DimensionMismatch(f"anchors must have shape (L, 3), got {anchors.shape}")
        if prv.ndim != 1 or prv.shape[0] != anchors.shape[0]:
            raise DimensionMismatch(
                f"prv length {prv.shape} does not match {anchors.shape[0]} anchors")
        if anchors.shape[0] < 1:
            raise DimensionMismatch("a user needs at least one path")
        if not (np.all(np.isfinite(anchors)) and np.all(np.isfinite(prv))):
            raise ValueError("anchors and prv must be finite")
        object.__setattr__(self, "anchors", _frozen(anchors, float))
        object.__setattr__(self, "prv", _frozen(prv, complex))

    @property
    def n_paths(self) -> int:
        return self.prv.shape[0]

    @classmethod
    def single_path(cls, position, coefficient=1.0) -> "UserChannel":
        return cls(np.reshape(position, (1, 3)), [coefficient])


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Subarray centers plus the per-subarray element layout.

    Parameters
    ----------
    centers : array_like, shape (M, 2)
        Subarray centers in the array plane (meters).
    offsets : array_like, shape (N, 2)
        Element positions relative to their subarray center, shared by all
        subarrays.
    region_half : float
        Half side of the square moving region ``[-A/2, A/2]^2``.
    d_min : float
        Minimum allowed center-to-center distance.
    """

    centers: np.ndarray
    offsets: np.ndarray = field(default_factory=lambda: np.zeros((1, 2)))
    region_half: float = np.inf
    d_min: float = 0.0

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1, 2)
        if centers.shape[0] < 1 or offsets.shape[0] < 1:
            raise DimensionMismatch("need at least one subarray and one element")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(offsets))):
            raise ValueError("geometry coordinates must be finite")
        object.__setattr__(self, "centers", _frozen(centers, float))
        object.__setattr__(self, "offsets", _frozen(offsets, float))
        object.__setattr__(self, "region_half", float(self.region_half))
        object.__setattr__(self, "d_min", float(self.d_min))

    @property
    def M(self) -> int:
        return self.centers.shape[0]

    @property
    def N(self) -> int:
        return self.offsets.shape[0]

    @property
    def apv(self) -> np.ndarray:
        """Stacked centers ``[x_1, y_1, ..., x_M, y_M]``."""
        return self.centers.reshape(-1).copy()

    def with_apv(self, apv) -> "ArrayGeometry":
        return ArrayGeometry(np.reshape(apv, (-1, 2)), self.offsets,
                             self.region_half, self.d_min)


def element_positions(geom: ArrayGeometry) -> np.ndarray:
    """3D element positions, shape (M*N, 3), subarray-major ordering."""
    pos2 = (geom.centers[:, None, :] + geom.offsets[None, :, :]).reshape(-1, 2)
    return np.column_stack([pos2, np.zeros(pos2.shape[0])])


def _distances(points: np.ndarray, anchors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = points[:, None, :] - anchors[None, :, :]
    dist = np.sqrt(np.einsum("ela,ela->el", diff, diff))
    if np.any(dist == 0.0):
        e, l = np.argwhere(dist == 0.0)[0]
        raise ZeroDistance(f"element {e} coincides with anchor {l}")
    return diff, dist


def nfrv(pos, user: UserChannel, wavelength: float) -> np.ndarray:
    """Near-field response of one point: ``exp(j 2 pi d_l / wavelength)`` per path."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    _, dist = _distances(np.reshape(np.asarray(pos, float), (1, 3)), user.anchors)
    return np.exp(1j * 2 * np.pi / wavelength * dist[0])


def channel_gain(pos, user: UserChannel, wavelength: float) -> complex:
    """Scalar channel ``nfrv(pos)^H b`` from one antenna position to a user."""
    return complex(np.vdot(nfrv(pos, user, wavelength), user.prv))


def _channel_from_points(points: np.ndarray, user: UserChannel, wavelength: float):
    _, dist = _distances(points, user.anchors)
    return np.exp(-1j * 2 * np.pi / wavelength * dist) @ user.prv


def channel_vector(geom: ArrayGeometry, user: UserChannel, wavelength: float) -> np.ndarray:
    """Channel vector of length M*N, ordered like :func:`element_positions`."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return _channel_from_points(element_positions(geom), user, wavelength)


def channel_matrix(geom: ArrayGeometry, users: Sequence[UserChannel],
                   wavelength: float) -> np.ndarray:
    """Stack user channel vectors as columns, shape (M*N, K)."""
    if len(users) < 1:
        raise DimensionMismatch("need at least one user")
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    pts = element_positions(geom)
    return np.column_stack([_channel_from_points(pts, u, wavelength) for u in users])


def channel_jacobian(geom: ArrayGeometry, users: Sequence[UserChannel], wavelength: float):
    """Channel matrix and its element-wise derivatives along x and y.

    Returns
    -------
    H, dHx, dHy : ndarray, shape (M*N, K)
        ``dHx[e, k]`` is the derivative of ``H[e, k]`` with respect to the x
        coordinate of element ``e``. Since every element moves rigidly with
        its subarray center, the derivative with respect to ``x_m`` is the
        sum over the rows of subarray ``m``.
    """
    kappa = 2 * np.pi / wavelength
    pts = element_positions(geom)
    H = np.empty((pts.shape[0], len(users)), dtype=complex)
    dHx = np.empty_like(H)
    dHy = np.empty_like(H)
    for k, u in enumerate(users):
        diff, dist = _distances(pts, u.anchors)
        terms = np.exp(-1j * kappa * dist) * u.prv[None, :]
        H[:, k] = terms.sum(axis=1)
        scaled = -1j * kappa * terms / dist
        dHx[:, k] = np.sum(scaled * diff[:, :, 0], axis=1)
        dHy[:, k] = np.sum(scaled * diff[:, :, 1], axis=1)
    return H, dHx, dHy

"""Beamforming gain maps over a horizontal grid of ground points."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..channel import ArrayGeometry, element_positions
from ..exceptions import ConfigError, DimensionMismatch

__all__ = ["GridSpec", "BeamGrid", "parse_grid_spec", "response", "focused_weights",
           "beam_pattern", "write_beam_csv"]


@dataclass(frozen=True)
class GridSpec:
    """Ground grid ``x in [x_min, x_max]`` by ``z in [z_min, z_max]`` at height ``y``."""

    x_range: tuple
    z_range: tuple
    nx: int
    nz: int
    y: float = -15.0
    focus: tuple | None = None
    wavelength: float | None = None

    def __post_init__(self):
        if self.nx < 1 or self.nz < 1:
            raise ValueError("grid resolution must be >= 1 in each direction")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    @property
    def zs(self) -> np.ndarray:
        return np.linspace(*self.z_range, self.nz)


@dataclass
class BeamGrid:
    focus: np.ndarray
    xs: np.ndarray
    zs: np.ndarray
    y: float
    gains: np.ndarray  # linear, shape (len(zs), len(xs)); NaN at degenerate points

    @property
    def gains_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.gains)


def parse_grid_spec(text: str) -> GridSpec:
    """Parse ``key=value`` pairs separated by ``;`` or newlines.

    Keys: ``x=min:max:n``, ``z=min:max:n``, ``y=height``,
    ``focus=x,y,z`` and ``wavelength=meters``. Lines starting with ``#``
    are ignored.

    >>> parse_grid_spec("x=-5:5:11; z=20:30:11; focus=0,-15,25").nx
    11
    """
    fields = {}
    for raw in text.replace(";", "\n").splitlines():
        item = raw.split("#", 1)[0].strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        fields[k] = v
    allowed = {"x", "z", "y", "focus", "wavelength"}
    if set(fields) - allowed:
        raise ConfigError(f"unknown grid keys {sorted(set(fields) - allowed)}")
    try:
        ranges = {}
        for ax in ("x", "z"):
            lo, hi, n = fields[ax].split(":")
            ranges[ax] = (float(lo), float(hi), int(n))
        focus = None
        if "focus" in fields:
            focus = tuple(float(v) for v in fields["focus"].split(","))
            if len(focus) != 3:
                raise ValueError("focus needs three coordinates")
        return GridSpec((ranges["x"][0], ranges["x"][1]), (ranges["z"][0], ranges["z"][1]),
                        ranges["x"][2], ranges["z"][2], float(fields.get("y", -15.0)), focus,
                        float(fields["wavelength"]) if "wavelength" in fields else None)
    except KeyError as e:
        raise ConfigError(f"grid spec is missing {e.args[0]!r}") from None
    except ValueError as e:
        raise ConfigError(f"bad grid spec: {e}") from None


def response(geom: ArrayGeometry, points, wavelength: float) -> np.ndarray:
    """Single-path unit-coefficient responses, shape (n_points, M*N).

    Rows are NaN where a point coincides with an element.
    """
    t = element_positions(geom)
    s = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.linalg.norm(s[:, None, :] - t[None, :, :], axis=-1)
    a = np.exp(-2j * np.pi * d / wavelength)
    a[np.any(d == 0, axis=1)] = np.nan
    return a


def focused_weights(geom: ArrayGeometry, focus, wavelength: float) -> np.ndarray:
    """Constant-modulus weights ``a(focus) / sqrt(M N)`` matched to ``focus``."""
    a = response(geom, focus, wavelength)[0]
    if np.isnan(a).any():
        raise ValueError("focus coincides with an array element")
    return a / np.sqrt(a.size)


def beam_pattern(geom: ArrayGeometry, w, spec: GridSpec, wavelength: float) -> BeamGrid:
    """Gain ``|a(s)^H w|^2`` at every grid point ``s = (x, spec.y, z)``."""
    w = np.asarray(w, dtype=complex)
    mn = geom.M * geom.N
    if w.shape != (mn,):
        raise DimensionMismatch(f"weights have shape {w.shape}, expected ({mn},)")
    xs, zs = spec.xs, spec.zs
    gx, gz = np.meshgrid(xs, zs)
    pts = np.column_stack([gx.ravel(), np.full(gx.size, spec.y), gz.ravel()])
    a = response(geom, pts, wavelength)
    gains = np.abs(a.conj() @ w) ** 2
    focus = np.full(3, np.nan) if spec.focus is None else np.asarray(spec.focus, float)
    return BeamGrid(focus, xs, zs, spec.y, gains.reshape(gz.shape))


def write_beam_csv(grid: BeamGrid, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "z", "gain_db"])
    db = grid.gains_db
    for iz, z in enumerate(grid.zs):
        for ix, x in enumerate(grid.xs):
            w.writerow([repr(float(x)), repr(float(z)), repr(float(db[iz, ix]))])

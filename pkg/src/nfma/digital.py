"""Digital (SDMA) beamforming with zero-forcing precoding.

The ZF precoder equalizes every user's SINR, so the max-min problem reduces
to maximizing ``P / (sigma^2 tr{(H^H H)^-1})`` over the subarray centers,
which is done by projected gradient ascent with Armijo backtracking.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from ._ascent import backtracking_step, min_spacing_ok, to_db
from .arrays import validate
from .bounds import max_min_bound
from .channel import ArrayGeometry, UserChannel, channel_jacobian, channel_matrix
from .exceptions import DimensionMismatch, IllConditionedChannel

__all__ = [
    "OptimizerConfig",
    "DigitalSolution",
    "TraceRow",
    "sinr_per_user",
    "zf_precoder",
    "zf_min_sinr",
    "min_sinr_upper_bound",
    "grad_min_sinr_apv",
    "project_to_region",
    "optimize_digital",
    "optimize_digital_statistical",
    "write_trace_csv",
]

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Iteration and line-search settings.

    ``init_step=None`` means ten wavelengths, resolved by the optimizer.
    ``tol`` applies to the linear-scale objective increment per iteration.
    """

    max_iters: int = 300
    tol: float = 1e-5
    init_step: float | None = None
    shrink: float = 0.5
    armijo: float = 0.1
    max_backtracks: int = 30

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must be in (0, 1)")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo must be in (0, 1)")
        if self.init_step is not None and not self.init_step > 0:
            raise ValueError("init_step must be positive")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be >= 0")

    def step_for(self, wavelength: float) -> float:
        return 10 * wavelength if self.init_step is None else self.init_step


@dataclass
class TraceRow:
    iter: int
    objective: float
    step: float = 0.0
    backtracks: int = 0
    phase_backtracks: int = 0


@dataclass
class DigitalSolution:
    geometry: ArrayGeometry
    precoder: np.ndarray
    per_user_sinr: np.ndarray
    min_sinr: float
    trace: list = field(default_factory=list)
    status: str = "converged"

    @property
    def n_iter(self) -> int:
        return max(len(self.trace) - 1, 0)


def sinr_per_user(geom: ArrayGeometry, W, users: Sequence[UserChannel], noise: float,
                  wavelength: float) -> np.ndarray:
    """Per-user SINR for an arbitrary precoder ``W`` of shape (M*N, K)."""
    H = channel_matrix(geom, users, wavelength)
    W = np.asarray(W, dtype=complex)
    if W.shape != H.shape:
        raise DimensionMismatch(f"precoder shape {W.shape} != channel shape {H.shape}")
    G = np.abs(H.conj().T @ W) ** 2  # G[k, j] = |h_k^H w_j|^2
    signal = np.diag(G).copy()
    interference = G.sum(axis=1) - signal
    return signal / (interference + noise)


def _gram_inverse(H: np.ndarray) -> np.ndarray:
    Z = H.conj().T @ H
    ev = np.linalg.eigvalsh(Z)
    if ev[-1] <= 0 or ev[0] / ev[-1] < RCOND_MIN:
        raise IllConditionedChannel(
            f"Gram matrix reciprocal condition {ev[0] / ev[-1] if ev[-1] > 0 else 0.0:.3g} "
            f"< {RCOND_MIN:g}")
    cf = scipy.linalg.cho_factor(Z, lower=True)
    Zi = scipy.linalg.cho_solve(cf, np.eye(Z.shape[0], dtype=complex))
    return (Zi + Zi.conj().T) / 2


def zf_precoder(H, power: float) -> np.ndarray:
    """Power-normalized zero-forcing precoder ``H (H^H H)^-1``."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] < H.shape[1]:
        raise DimensionMismatch(f"ZF needs a tall channel matrix, got {H.shape}")
    W = H @ _gram_inverse(H)
    return W * np.sqrt(power) / np.linalg.norm(W)


def _zf_value(H, power, noise):
    return power / (np.trace(_gram_inverse(H)).real * noise)


def zf_min_sinr(geom: ArrayGeometry, users: Sequence[UserChannel], power: float,
                noise: float, wavelength: float) -> float:
    """Common SINR of all users under the ZF precoder."""
    return float(_zf_value(channel_matrix(geom, users, wavelength), power, noise))


def min_sinr_upper_bound(users: Sequence[UserChannel], M: int, N: int, power: float,
                         noise: float) -> tuple[float, np.ndarray]:
    return max_min_bound(users, M, N, power, noise)


def _zf_value_and_grad(geom, users, power, noise, wavelength):
    H, dHx, dHy = channel_jacobian(geom, users, wavelength)
    Zi = _gram_inverse(H)
    T = np.trace(Zi).real
    HY = H @ (Zi @ Zi)
    # d tr(Z^-1) = -tr(Z^-2 dZ) and tr(Z^-2 dZ) = 2 Re sum_e,k conj(dH) * (H Z^-2)
    gx = 2 * np.sum(np.conj(dHx) * HY, axis=1).real
    gy = 2 * np.sum(np.conj(dHy) * HY, axis=1).real
    coef = power / (noise * T * T)
    g = np.column_stack([gx.reshape(geom.M, geom.N).sum(axis=1),
                         gy.reshape(geom.M, geom.N).sum(axis=1)])
    return power / (noise * T), coef * g.ravel()


def grad_min_sinr_apv(geom: ArrayGeometry, users: Sequence[UserChannel], power: float,
                      noise: float, wavelength: float) -> np.ndarray:
    """Analytic gradient of the ZF SINR w.r.t. ``[x_1, y_1, ..., x_M, y_M]``."""
    return _zf_value_and_grad(geom, users, power, noise, wavelength)[1]


def project_to_region(apv, region_half: float) -> np.ndarray:
    """Clamp every coordinate into ``[-region_half, region_half]``."""
    return np.clip(np.asarray(apv, dtype=float), -region_half, region_half)


def _ascend(init_geom, value_and_grad, value, wavelength, cfg):
    """Projected gradient ascent loop shared by the instantaneous and averaged objectives."""
    cfg = cfg or OptimizerConfig()
    geom = init_geom
    x = geom.apv
    fx = value(x)
    trace = [TraceRow(0, fx)]
    status = "max_iters"
    for i in range(1, cfg.max_iters + 1):
        _, g = value_and_grad(x)
        res = backtracking_step(
            x, fx, g, value,
            init_step=cfg.step_for(wavelength), shrink=cfg.shrink, armijo=cfg.armijo,
            max_backtracks=cfg.max_backtracks,
            project=lambda v: project_to_region(v, geom.region_half),
            feasible=lambda v: min_spacing_ok(v, geom.d_min),
        )
        if not res.accepted:
            trace.append(TraceRow(i, fx, 0.0, res.backtracks))
            status = "stationary"
            break
        gain = res.value - fx
        x, fx = res.x, res.value
        trace.append(TraceRow(i, fx, res.step, res.backtracks))
        if gain < cfg.tol:
            status = "converged"
            break
    return geom.with_apv(x), trace, status


def optimize_digital(init_geom: ArrayGeometry, users: Sequence[UserChannel], power: float,
                     noise: float, wavelength: float,
                     cfg: OptimizerConfig | None = None) -> DigitalSolution:
    """Jointly choose subarray centers and the ZF precoder to maximize the minimum SINR.

    Raises
    ------
    IllConditionedChannel
        If ZF is infeasible at the initial geometry. Trial points where it
        fails later are simply rejected by the line search.
    ValueError
        If the initial geometry violates the region or spacing constraints.
    """
    if validate(init_geom):
        raise ValueError(f"initial geometry infeasible: {validate(init_geom)[:3]}")

    def value_and_grad(x):
        return _zf_value_and_grad(init_geom.with_apv(x), users, power, noise, wavelength)

    def value(x):
        return float(_zf_value(channel_matrix(init_geom.with_apv(x), users, wavelength),
                               power, noise))

    geom, trace, status = _ascend(init_geom, value_and_grad, value, wavelength, cfg)
    H = channel_matrix(geom, users, wavelength)
    W = zf_precoder(H, power)
    sinr = sinr_per_user(geom, W, users, noise, wavelength)
    return DigitalSolution(geom, W, sinr, float(sinr.min()), trace, status)


@dataclass
class StatisticalDigitalSolution:
    geometry: ArrayGeometry
    precoders: list
    min_sinr: np.ndarray
    trace: list = field(default_factory=list)
    status: str = "converged"

    @property
    def mean_min_sinr(self) -> float:
        return float(np.mean(self.min_sinr))


def optimize_digital_statistical(init_geom: ArrayGeometry,
                                 realizations: Sequence[Sequence[UserChannel]],
                                 power: float, noise: float, wavelength: float,
                                 cfg: OptimizerConfig | None = None) -> StatisticalDigitalSolution:
    """Optimize one geometry for the Monte Carlo average of the ZF SINR.

    ``realizations`` is a list of user sets drawn from the channel
    distribution; each keeps its own ZF precoder while the centers are shared.
    Per-realization gradients are reduced in list order.
    """
    if len(realizations) < 1:
        raise ValueError("need at least one realization")
    if validate(init_geom):
        raise ValueError(f"initial geometry infeasible: {validate(init_geom)[:3]}")
    Q = len(realizations)

    def value(x):
        g = init_geom.with_apv(x)
        total = 0.0
        for users in realizations:
            total += _zf_value(channel_matrix(g, users, wavelength), power, noise)
        return float(total / Q)

    def value_and_grad(x):
        g = init_geom.with_apv(x)
        v, grad = 0.0, np.zeros_like(x)
        for users in realizations:
            vq, gq = _zf_value_and_grad(g, users, power, noise, wavelength)
            v += vq
            grad += gq
        return v / Q, grad / Q

    geom, trace, status = _ascend(init_geom, value_and_grad, value, wavelength, cfg)
    precoders, mins = [], []
    for users in realizations:
        H = channel_matrix(geom, users, wavelength)
        W = zf_precoder(H, power)
        precoders.append(W)
        mins.append(sinr_per_user(geom, W, users, noise, wavelength).min())
    return StatisticalDigitalSolution(geom, precoders, np.array(mins), trace, status)


def write_trace_csv(trace: Sequence[TraceRow], fh, kind: str = "digital") -> None:
    """Write an iteration trace.

    Digital traces carry ``step_size, backtracks``; analog traces carry the
    backtrack counts of the position and phase half-steps.
    """
    w = csv.writer(fh, lineterminator="\n")
    if kind == "digital":
        w.writerow(["iter", "objective_linear", "objective_db", "step_size", "backtracks"])
        for r in trace:
            w.writerow([r.iter, repr(float(r.objective)), repr(float(to_db(r.objective))),
                        repr(float(r.step)), r.backtracks])
    else:
        w.writerow(["iter", "objective_linear", "objective_db", "apv_backtracks",
                    "phase_backtracks"])
        for r in trace:
            w.writerow([r.iter, repr(float(r.objective)), repr(float(to_db(r.objective))),
                        r.backtracks, r.phase_backtracks])

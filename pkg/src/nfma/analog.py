"""Analog (single RF chain, OFDMA) beamforming with constant-modulus weights.

Users sit on orthogonal subcarriers, so the only coupling between them is the
shared phase vector and the power budget. For fixed phases the max-min power
split is closed form, leaving a smooth objective in (centers, phases) that is
ascended by alternating gradient steps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._ascent import backtracking_step, min_spacing_ok
from .arrays import validate
from .bounds import max_min_bound
from .channel import ArrayGeometry, UserChannel, channel_jacobian, channel_matrix
from .digital import OptimizerConfig, TraceRow, project_to_region
from .exceptions import DimensionMismatch, ZeroGain, ZeroSumWarning

__all__ = [
    "AnalogSolution",
    "StatisticalAnalogSolution",
    "beamformer",
    "snr_per_user",
    "optimal_power_allocation",
    "min_snr",
    "min_snr_upper_bound",
    "grad_min_snr_apv",
    "grad_min_snr_phase",
    "init_phases",
    "optimize_analog",
    "optimize_analog_statistical",
]


@dataclass
class AnalogSolution:
    geometry: ArrayGeometry
    phases: np.ndarray
    power: np.ndarray
    per_user_snr: np.ndarray
    min_snr: float
    trace: list = field(default_factory=list)
    status: str = "converged"

    @property
    def weights(self) -> np.ndarray:
        return beamformer(self.phases)

    @property
    def n_iter(self) -> int:
        return max(len(self.trace) - 1, 0)


def beamformer(phases) -> np.ndarray:
    """Constant-modulus weights ``exp(j phases) / sqrt(len(phases))``."""
    phases = np.asarray(phases, dtype=float)
    return np.exp(1j * phases) / np.sqrt(phases.size)


def _check_phases(H, phases):
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (H.shape[0],):
        raise DimensionMismatch(f"expected {H.shape[0]} phases, got shape {phases.shape}")
    return phases


def _beam_gains(H, phases) -> tuple[np.ndarray, np.ndarray]:
    u = H.conj().T @ beamformer(phases)  # u_k = h_k^H w
    return u, np.abs(u) ** 2


def snr_per_user(geom: ArrayGeometry, phases, p, users: Sequence[UserChannel], noise: float,
                 wavelength: float) -> np.ndarray:
    H = channel_matrix(geom, users, wavelength)
    phases = _check_phases(H, phases)
    p = np.asarray(p, dtype=float)
    if p.shape != (H.shape[1],):
        raise DimensionMismatch(f"expected {H.shape[1]} powers, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    return _beam_gains(H, phases)[1] * p / noise


def _allocation(a, power):
    if np.any(a == 0):
        raise ZeroGain(f"users {np.flatnonzero(a == 0).tolist()} get zero beam gain")
    inv = 1.0 / a
    return power * inv / inv.sum()


def optimal_power_allocation(geom: ArrayGeometry, phases, users: Sequence[UserChannel],
                             power: float, noise: float, wavelength: float) -> np.ndarray:
    """Powers inversely proportional to each user's beam gain, summing to ``power``."""
    H = channel_matrix(geom, users, wavelength)
    a = _beam_gains(H, _check_phases(H, phases))[1]
    return _allocation(a, power)


def _eta(a, power, noise):
    if np.any(a == 0):
        raise ZeroGain(f"users {np.flatnonzero(a == 0).tolist()} get zero beam gain")
    return power / noise / np.sum(1.0 / a)


def min_snr(geom: ArrayGeometry, phases, users: Sequence[UserChannel], power: float,
            noise: float, wavelength: float) -> float:
    """Common SNR after max-min power allocation: ``(P/noise) / sum_k 1/|h_k^H w|^2``."""
    H = channel_matrix(geom, users, wavelength)
    return float(_eta(_beam_gains(H, _check_phases(H, phases))[1], power, noise))


def min_snr_upper_bound(users: Sequence[UserChannel], M: int, N: int, power: float,
                        noise: float) -> float:
    return max_min_bound(users, M, N, power, noise)[0]


def _apv_value_and_grad(geom, phases, users, power, noise, wavelength):
    H, dHx, dHy = channel_jacobian(geom, users, wavelength)
    w = beamformer(phases)
    u = H.conj().T @ w
    a = np.abs(u) ** 2
    eta = _eta(a, power, noise)
    S = np.sum(1.0 / a)
    # da_k/dx_e = 2 Re{ conj(u_k) conj(dH[e, k]) w_e }
    weight = (power / noise) / S**2 / a**2
    ex = 2 * (np.conj(u)[None, :] * np.conj(dHx) * w[:, None]).real @ weight
    ey = 2 * (np.conj(u)[None, :] * np.conj(dHy) * w[:, None]).real @ weight
    g = np.column_stack([ex.reshape(geom.M, geom.N).sum(axis=1),
                         ey.reshape(geom.M, geom.N).sum(axis=1)])
    return eta, g.ravel()


def _phase_value_and_grad(H, phases, power, noise):
    w = beamformer(phases)
    u = H.conj().T @ w
    a = np.abs(u) ** 2
    eta = _eta(a, power, noise)
    weight = (power / noise) / np.sum(1.0 / a) ** 2 / a**2
    # du_k/dphi_q = j conj(H[q, k]) w_q
    da = 2 * (np.conj(u)[None, :] * 1j * np.conj(H) * w[:, None]).real
    return eta, da @ weight


def grad_min_snr_apv(geom: ArrayGeometry, phases, users: Sequence[UserChannel], power: float,
                     noise: float, wavelength: float) -> np.ndarray:
    """Gradient of :func:`min_snr` w.r.t. ``[x_1, y_1, ..., x_M, y_M]`` at fixed phases."""
    H = channel_matrix(geom, users, wavelength)
    _check_phases(H, phases)
    return _apv_value_and_grad(geom, phases, users, power, noise, wavelength)[1]


def grad_min_snr_phase(geom: ArrayGeometry, phases, users: Sequence[UserChannel],
                       power: float, noise: float, wavelength: float) -> np.ndarray:
    """Gradient of :func:`min_snr` w.r.t. the M*N beamformer phases."""
    H = channel_matrix(geom, users, wavelength)
    return _phase_value_and_grad(H, _check_phases(H, phases), power, noise)[1]


def init_phases(geom: ArrayGeometry, users: Sequence[UserChannel],
                wavelength: float) -> np.ndarray:
    """Phases of the sum of unit-norm user channels.

    For a single user this is the matched (phase-aligned) beam. Entries where
    the sum vanishes get phase 0 and a :class:`ZeroSumWarning`.
    """
    H = channel_matrix(geom, users, wavelength)
    norms = np.linalg.norm(H, axis=0)
    s = (H / np.where(norms > 0, norms, 1.0)).sum(axis=1)
    zero = s == 0
    if np.any(zero):
        warnings.warn(f"phase undefined at elements {np.flatnonzero(zero).tolist()}; using 0",
                      ZeroSumWarning, stacklevel=2)
    return np.where(zero, 0.0, np.angle(s))


def _ls_kwargs(cfg, wavelength):
    return dict(init_step=cfg.step_for(wavelength), shrink=cfg.shrink, armijo=cfg.armijo,
                max_backtracks=cfg.max_backtracks)


def optimize_analog(init_geom: ArrayGeometry, users: Sequence[UserChannel], power: float,
                    noise: float, wavelength: float, cfg: OptimizerConfig | None = None,
                    phases=None, freeze_positions: bool = False,
                    callback=None) -> AnalogSolution:
    """Alternate projected steps on the centers and gradient steps on the phases.

    Each iteration takes one backtracked step on the centers (kept inside the
    region and at least ``d_min`` apart) and then one on the phases; a
    half-step whose line search fails leaves its block unchanged. The loop
    stops when the per-iteration gain drops below ``cfg.tol``, after
    ``cfg.max_iters`` iterations, or when both half-steps fail.

    Parameters
    ----------
    phases : array_like, optional
        Starting phases; defaults to :func:`init_phases` at ``init_geom``.
    freeze_positions : bool
        Optimize the phases only (fixed-array benchmarks).
    callback : callable, optional
        Called as ``callback(i, apv, phases)`` after every iteration.
    """
    cfg = cfg or OptimizerConfig()
    if validate(init_geom) and not freeze_positions:
        raise ValueError(f"initial geometry infeasible: {validate(init_geom)[:3]}")
    geom = init_geom
    x = geom.apv
    phi = init_phases(geom, users, wavelength) if phases is None else np.array(phases, float)
    H = channel_matrix(geom, users, wavelength)
    _check_phases(H, phi)
    f = float(_eta(_beam_gains(H, phi)[1], power, noise))
    trace = [TraceRow(0, f)]
    status = "max_iters"
    ls = _ls_kwargs(cfg, wavelength)

    for i in range(1, cfg.max_iters + 1):
        f_start = f
        apv_bt, apv_ok, apv_step = 0, False, 0.0
        if not freeze_positions:
            _, g = _apv_value_and_grad(geom.with_apv(x), phi, users, power, noise, wavelength)
            res = backtracking_step(
                x, f, g,
                lambda v: min_snr(geom.with_apv(v), phi, users, power, noise, wavelength),
                project=lambda v: project_to_region(v, geom.region_half),
                feasible=lambda v: min_spacing_ok(v, geom.d_min), **ls)
            x, f, apv_bt, apv_ok, apv_step = res.x, res.value, res.backtracks, res.accepted, res.step
        H = channel_matrix(geom.with_apv(x), users, wavelength)
        _, gp = _phase_value_and_grad(H, phi, power, noise)
        res = backtracking_step(phi, f, gp, lambda v: _eta(_beam_gains(H, v)[1], power, noise),
                                **ls)
        phi, f = res.x, res.value
        trace.append(TraceRow(i, f, apv_step, apv_bt, res.backtracks))
        if callback is not None:
            callback(i, x.copy(), phi.copy())
        if not res.accepted and (freeze_positions or not apv_ok):
            status = "stationary"
            break
        if f - f_start < cfg.tol:
            status = "converged"
            break

    final = geom.with_apv(x)
    H = channel_matrix(final, users, wavelength)
    a = _beam_gains(H, phi)[1]
    p = _allocation(a, power)
    snr = a * p / noise
    return AnalogSolution(final, np.mod(phi, 2 * np.pi), p, snr, float(snr.min()), trace, status)


@dataclass
class StatisticalAnalogSolution:
    geometry: ArrayGeometry
    phases: list
    powers: list
    min_snr: np.ndarray
    trace: list = field(default_factory=list)
    status: str = "converged"

    @property
    def mean_min_snr(self) -> float:
        return float(np.mean(self.min_snr))


def optimize_analog_statistical(init_geom: ArrayGeometry,
                                realizations: Sequence[Sequence[UserChannel]],
                                power: float, noise: float, wavelength: float,
                                cfg: OptimizerConfig | None = None) -> StatisticalAnalogSolution:
    """Alternating optimization of shared centers and per-realization phases.

    The center step ascends the average of the per-realization min-SNRs
    (gradients reduced in list order); every realization then takes its own
    backtracked phase step.
    """
    cfg = cfg or OptimizerConfig()
    if len(realizations) < 1:
        raise ValueError("need at least one realization")
    if validate(init_geom):
        raise ValueError(f"initial geometry infeasible: {validate(init_geom)[:3]}")
    Q = len(realizations)
    geom = init_geom
    x = geom.apv
    phis = [init_phases(geom, users, wavelength) for users in realizations]

    def per_real(v, phis_):
        g = geom.with_apv(v)
        return np.array([min_snr(g, ph, users, power, noise, wavelength)
                         for users, ph in zip(realizations, phis_)])

    vals = per_real(x, phis)
    f = float(vals.mean())
    trace = [TraceRow(0, f)]
    status = "max_iters"
    ls = _ls_kwargs(cfg, wavelength)

    for i in range(1, cfg.max_iters + 1):
        f_start = f
        g_sum = np.zeros_like(x)
        for users, ph in zip(realizations, phis):
            g_sum += _apv_value_and_grad(geom.with_apv(x), ph, users, power, noise,
                                         wavelength)[1]
        res = backtracking_step(
            x, f, g_sum / Q, lambda v: float(per_real(v, phis).mean()),
            project=lambda v: project_to_region(v, geom.region_half),
            feasible=lambda v: min_spacing_ok(v, geom.d_min), **ls)
        x, apv_ok, apv_bt, apv_step = res.x, res.accepted, res.backtracks, res.step
        vals = per_real(x, phis)
        g_now = geom.with_apv(x)
        phase_bt, phase_ok = 0, False
        for q, users in enumerate(realizations):
            H = channel_matrix(g_now, users, wavelength)
            _, gp = _phase_value_and_grad(H, phis[q], power, noise)
            r = backtracking_step(phis[q], vals[q], gp,
                                  lambda v, H=H: _eta(_beam_gains(H, v)[1], power, noise), **ls)
            phis[q], vals[q] = r.x, r.value
            phase_bt = max(phase_bt, r.backtracks)
            phase_ok = phase_ok or r.accepted
        f = float(vals.mean())
        trace.append(TraceRow(i, f, apv_step, apv_bt, phase_bt))
        if not apv_ok and not phase_ok:
            status = "stationary"
            break
        if f - f_start < cfg.tol:
            status = "converged"
            break

    final = geom.with_apv(x)
    powers, mins = [], []
    for users, ph in zip(realizations, phis):
        H = channel_matrix(final, users, wavelength)
        a = _beam_gains(H, ph)[1]
        p = _allocation(a, power)
        powers.append(p)
        mins.append(float((a * p / noise).min()))
    return StatisticalAnalogSolution(final, [np.mod(ph, 2 * np.pi) for ph in phis], powers,
                                     np.array(mins), trace, status)

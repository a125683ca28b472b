"""Estimator-style wrappers around the position and beamformer optimizers.

``fit`` learns subarray positions from either one user set (instantaneous
CSI) or a list of user sets (statistical CSI). ``predict`` then designs the
beamformer for new users with the positions held fixed, and ``score``
reports the mean minimum SINR/SNR in dB.

>>> est = DigitalBeamformer(M=4, side_A=0.5, wavelength=0.01)   # doctest: +SKIP
>>> est.fit(users).score(users)                                 # doctest: +SKIP
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .analog import min_snr, optimize_analog, optimize_analog_statistical
from .arrays import RegionSpec, default_d_min, init_subregion_grid, subarray_offsets
from .bounds import max_min_bound
from .channel import UserChannel, channel_matrix
from .digital import (OptimizerConfig, optimize_digital, optimize_digital_statistical,
                      zf_min_sinr, zf_precoder)

__all__ = ["DigitalBeamformer", "AnalogBeamformer", "check_user_sets"]


def check_user_sets(X) -> tuple[list[list[UserChannel]], bool]:
    """Normalize ``X`` to a list of user sets.

    Returns the sets and whether ``X`` was a single set (a flat sequence of
    :class:`UserChannel`).
    """
    if isinstance(X, UserChannel):
        raise TypeError("expected a sequence of users, not a single UserChannel")
    X = list(X)
    if not X:
        raise ValueError("no users given")
    if all(isinstance(u, UserChannel) for u in X):
        return [X], True
    sets = []
    for s in X:
        s = list(s)
        if not s or not all(isinstance(u, UserChannel) for u in s):
            raise TypeError("each realization must be a non-empty sequence of UserChannel")
        sets.append(s)
    if len({len(s) for s in sets}) != 1:
        raise ValueError("all realizations must have the same number of users")
    return sets, False


class _Base(BaseEstimator):
    def __init__(self, M=16, nx=1, ny=1, wavelength=0.01, side_A=0.5, d_min=None,
                 power_dbm=20.0, noise_dbm=-80.0, init_scale=0.5, max_iters=300, tol=1e-5,
                 init_step=None, shrink=0.5, armijo=0.1, max_backtracks=30):
        self.M = M
        self.nx = nx
        self.ny = ny
        self.wavelength = wavelength
        self.side_A = side_A
        self.d_min = d_min
        self.power_dbm = power_dbm
        self.noise_dbm = noise_dbm
        self.init_scale = init_scale
        self.max_iters = max_iters
        self.tol = tol
        self.init_step = init_step
        self.shrink = shrink
        self.armijo = armijo
        self.max_backtracks = max_backtracks

    @property
    def _power(self):
        return 10 ** (self.power_dbm / 10)

    @property
    def _noise(self):
        return 10 ** (self.noise_dbm / 10)

    def _setup(self):
        lam = self.wavelength
        d_min = default_d_min(lam, self.nx, self.ny) if self.d_min is None else self.d_min
        region = RegionSpec(self.side_A, d_min)
        offsets = subarray_offsets(self.nx, self.ny, lam)
        cfg = OptimizerConfig(self.max_iters, self.tol, self.init_step, self.shrink,
                              self.armijo, self.max_backtracks)
        return init_subregion_grid(self.M, region, self.init_scale, offsets), cfg

    def _store(self, sol, sets):
        self.geometry_ = sol.geometry
        self.trace_ = sol.trace
        self.status_ = sol.status
        self.n_iter_ = max(len(sol.trace) - 1, 0)
        self.n_users_ = len(sets[0])
        N = self.nx * self.ny
        self.bound_ = float(np.mean([max_min_bound(s, self.M, N, self._power, self._noise)[0]
                                     for s in sets]))

    def _check_predict(self, X):
        check_is_fitted(self, "geometry_")
        return check_user_sets(X)

    def score(self, X, y=None) -> float:
        """Mean (over user sets) of the minimum SINR/SNR in dB."""
        sets, _ = self._check_predict(X)
        return float(10 * np.log10(np.mean([self._metric(s) for s in sets])))


class DigitalBeamformer(_Base):
    """Movable subarrays with zero-forcing precoding (one RF chain per user).

    Fitted attributes: ``geometry_``, ``trace_``, ``status_``, ``n_iter_``,
    ``min_sinr_`` (training value, linear) and ``bound_`` (mean closed-form
    bound over the training sets).
    """

    def fit(self, X, y=None):
        sets, single = check_user_sets(X)
        init, cfg = self._setup()
        if single:
            sol = optimize_digital(init, sets[0], self._power, self._noise, self.wavelength, cfg)
            self.min_sinr_ = sol.min_sinr
        else:
            sol = optimize_digital_statistical(init, sets, self._power, self._noise,
                                               self.wavelength, cfg)
            self.min_sinr_ = sol.mean_min_sinr
        self._store(sol, sets)
        return self

    def predict(self, X):
        """ZF precoder(s) of shape (M*N, K) at the fitted positions."""
        sets, single = self._check_predict(X)
        W = [zf_precoder(channel_matrix(self.geometry_, s, self.wavelength), self._power)
             for s in sets]
        return W[0] if single else W

    def _metric(self, users):
        return zf_min_sinr(self.geometry_, users, self._power, self._noise, self.wavelength)


class AnalogBeamformer(_Base):
    """Movable subarrays behind a single RF chain with constant-modulus phases.

    ``predict`` re-optimizes the phases (positions frozen) for the given
    users and returns them; the matching power split is available from
    :func:`nfma.analog.optimal_power_allocation`.
    """

    def __init__(self, M=16, nx=1, ny=1, wavelength=0.01, side_A=0.5, d_min=None,
                 power_dbm=20.0, noise_dbm=-80.0, init_scale=0.1, max_iters=300, tol=1e-5,
                 init_step=None, shrink=0.5, armijo=0.1, max_backtracks=30):
        super().__init__(M, nx, ny, wavelength, side_A, d_min, power_dbm, noise_dbm, init_scale,
                         max_iters, tol, init_step, shrink, armijo, max_backtracks)

    def fit(self, X, y=None):
        sets, single = check_user_sets(X)
        init, cfg = self._setup()
        if single:
            sol = optimize_analog(init, sets[0], self._power, self._noise, self.wavelength, cfg)
            self.phases_ = sol.phases
            self.min_snr_ = sol.min_snr
        else:
            sol = optimize_analog_statistical(init, sets, self._power, self._noise,
                                              self.wavelength, cfg)
            self.phases_ = None
            self.min_snr_ = sol.mean_min_snr
        self._cfg_ = cfg
        self._store(sol, sets)
        return self

    def _phases_for(self, users):
        sol = optimize_analog(self.geometry_, users, self._power, self._noise, self.wavelength,
                              self._cfg_, freeze_positions=True)
        return sol.phases

    def predict(self, X):
        """Phase vector(s) of length M*N optimized for ``X`` at the fitted positions."""
        sets, single = self._check_predict(X)
        phis = [self._phases_for(s) for s in sets]
        return phis[0] if single else phis

    def _metric(self, users):
        return min_snr(self.geometry_, self._phases_for(users), users, self._power, self._noise,
                       self.wavelength)

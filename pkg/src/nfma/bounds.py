"""Closed-form max-min upper bound shared by the digital and analog architectures."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .channel import UserChannel
from .exceptions import ZeroChannel


def max_min_bound(users: Sequence[UserChannel], M: int, N: int, power: float,
                  noise: float) -> tuple[float, np.ndarray]:
    """Upper bound on the minimum SINR/SNR and the power split attaining it.

    Each user's SINR is at most ``M N ||b_k||_1^2 p_k / noise``; equalizing
    these under ``sum(p) = power`` gives a harmonic-mean form.

    Returns
    -------
    bound : float
        ``(power / noise) / sum_k 1 / (M N ||b_k||_1^2)``.
    p : ndarray, shape (K,)
        Per-user powers with ``M N ||b_k||_1^2 p_k / noise == bound``.
    """
    gains = np.array([M * N * np.sum(np.abs(u.prv)) ** 2 for u in users])
    if np.any(gains == 0):
        raise ZeroChannel(f"users {np.flatnonzero(gains == 0).tolist()} have zero path gain")
    inv = 1.0 / gains
    bound = power / noise / inv.sum()
    p = power * inv / inv.sum()
    return float(bound), p

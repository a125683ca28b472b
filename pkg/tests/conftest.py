import numpy as np
import pytest
from hypothesis import settings

from nfma.channel import ArrayGeometry, UserChannel

settings.register_profile("nfma", max_examples=40, deadline=None)
settings.load_profile("nfma")

LAM = 0.01
P_MW = 100.0  # 20 dBm
NOISE_MW = 1e-8  # -80 dBm


def random_users(rng, K, n_nlos=0, lam=LAM, r_min=5.0, r_max=50.0, height=15.0):
    """Ground users in front of the array with free-space LoS amplitudes."""
    users = []
    for _ in range(K):
        r = np.sqrt(rng.uniform(r_min**2, r_max**2))
        th = rng.uniform(0, np.pi)
        s0 = np.array([r * np.cos(th), -height, r * np.sin(th)])
        anchors = [s0]
        amps = [lam / (4 * np.pi * np.linalg.norm(s0))]
        for _ in range(n_nlos):
            sc = np.array([rng.uniform(-20, 20), rng.uniform(-height, 0), rng.uniform(5, 50)])
            anchors.append(sc)
            amps.append(0.3 * lam / (4 * np.pi * (np.linalg.norm(sc) + np.linalg.norm(sc - s0))))
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi, len(amps)))
        users.append(UserChannel(np.array(anchors), np.array(amps) * phase))
    return users


def random_geometry(rng, M, N=1, side=50 * LAM, lam=LAM):
    """Random centers on a jittered grid so spacing stays above half a wavelength."""
    from nfma.arrays import subarray_offsets
    cols = int(np.ceil(np.sqrt(M)))
    pitch = side / cols
    idx = np.arange(M)
    base = np.column_stack([idx % cols, idx // cols]) * pitch - side / 2 + pitch / 2
    jitter = rng.uniform(-0.2, 0.2, size=(M, 2)) * pitch
    offsets = subarray_offsets(N, 1, lam) if N > 1 else np.zeros((1, 2))
    return ArrayGeometry(base + jitter, offsets, side / 2, lam / 2 * N)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

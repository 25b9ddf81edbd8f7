"""System configuration and per-frame channel generation.

The model is the symmetric K-cell interfering broadcast channel: every
user-to-base-station link is an i.i.d. Rayleigh n_r x n_t matrix, constant
over one frame.  Noise power is fixed at 1, so the configured transmit
power P is the SNR directly (P = 10^(dB/10)).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import sample_complex_gaussian_matrix

__all__ = ["SystemConfig", "ChannelSet", "sample_frame", "save_frame", "load_frame"]


@dataclass(frozen=True)
class SystemConfig:
    """Network dimensions and transmit power.

    K base stations with n_t antennas each, U users with n_r antennas,
    per-base-station power P (linear; noise power is 1).
    """

    K: int = 3
    U: int = 9
    n_t: int = 5
    n_r: int = 5
    P: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.U < self.K:
            raise ValueError(f"U must be >= K, got U={self.U}, K={self.K}")
        if self.n_t < 2:
            raise ValueError(f"n_t must be >= 2, got {self.n_t}")
        if self.n_r < 1:
            raise ValueError(f"n_r must be >= 1, got {self.n_r}")
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P}")

    @property
    def snr_db(self):
        return 10.0 * np.log10(self.P)

    def with_power(self, p):
        return SystemConfig(self.K, self.U, self.n_t, self.n_r, float(p))


class ChannelSet:
    """One frame of channel matrices H[m][l] (user m, cell l), immutable."""

    def __init__(self, matrices):
        m = np.asarray(matrices, dtype=np.complex128)
        if m.ndim != 4:
            raise ValueError(f"expected (U, K, n_r, n_t) array, got shape {m.shape}")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise ValueError("channel matrices contain non-finite entries")
        m.setflags(write=False)
        self._m = m

    @property
    def matrices(self):
        return self._m

    @property
    def U(self):
        return self._m.shape[0]

    @property
    def K(self):
        return self._m.shape[1]

    @property
    def n_r(self):
        return self._m.shape[2]

    @property
    def n_t(self):
        return self._m.shape[3]

    def get(self, user, cell):
        """Channel matrix from base station ``cell`` to user ``user``."""
        return self._m[user, cell]

    def __eq__(self, other):
        return isinstance(other, ChannelSet) and np.array_equal(self._m, other._m)


def sample_frame(cfg, rng):
    """Draw one frame: U*K independent CN(0,1) matrices of shape n_r x n_t."""
    flat = sample_complex_gaussian_matrix(cfg.U * cfg.K * cfg.n_r, cfg.n_t, rng)
    return ChannelSet(flat.reshape(cfg.U, cfg.K, cfg.n_r, cfg.n_t))


def save_frame(channels, path):
    """Write a frame as a regression fixture.

    Format: one ASCII header line ``K U n_t n_r`` followed by little-endian
    float64 interleaved re/im in (user, cell, row, col) order.
    """
    header = f"{channels.K} {channels.U} {channels.n_t} {channels.n_r}\n"
    inter = np.empty(channels.matrices.shape + (2,), dtype="<f8")
    inter[..., 0] = channels.matrices.real
    inter[..., 1] = channels.matrices.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(inter.tobytes())


def load_frame(path):
    """Read a frame written by :func:`save_frame`."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 4:
            raise ValueError(f"malformed frame header: {header!r}")
        K, U, n_t, n_r = (int(x) for x in header)
        raw = np.frombuffer(fh.read(), dtype="<f8")
    expected = U * K * n_r * n_t * 2
    if raw.size != expected:
        raise ValueError(f"frame payload has {raw.size} scalars, expected {expected}")
    inter = raw.reshape(U, K, n_r, n_t, 2)
    return ChannelSet(inter[..., 0] + 1j * inter[..., 1])

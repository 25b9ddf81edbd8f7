"""Centralized interference-alignment baselines with full-matrix feedback.

Both baselines ship every channel matrix to a central unit, which runs the
same alternation as the distributed algorithm but sees only the quantized
reconstruction: scalar quantization digitizes each real/imaginary entry
uniformly, vector quantization applies RVQ to the stacked channel matrix.
Per-iteration feedback cost is zero after the initial report.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .feedback import build_codebook, quantize
from .ia import run_algorithm1

__all__ = [
    "QuantizedChannelSet",
    "scalar_quantize_channels",
    "vector_quantize_channels",
    "run_centralized_ia",
    "sq_bits_per_user",
    "vq_bits_per_user",
    "alg1_bits_per_user",
]

#: Four standard deviations of a CN(0,1) entry's real part.
SQ_DEFAULT_CLIP = 4.0 * math.sqrt(0.5)


@dataclass(frozen=True)
class QuantizedChannelSet:
    """Reconstructed channel matrices plus the feedback-bit accounting."""

    channels: ChannelSet
    scheme: str               # "SQ" | "VQ" | "none"
    bits_per_user: float


def sq_bits_per_user(cfg, bits):
    """Scalar quantization: 2 K n_t n_r B_s bits per user per report."""
    return 2 * cfg.K * cfg.n_t * cfg.n_r * bits


def vq_bits_per_user(cfg, bits):
    """Vector quantization: K B_vq bits per user per report."""
    return cfg.K * bits


def alg1_bits_per_user(cfg, bits, iterations):
    """Distributed algorithm: K B bits per user per iteration."""
    return cfg.K * bits * iterations


def scalar_quantize_channels(channels, bits, clip=SQ_DEFAULT_CLIP):
    """Map each real and imaginary entry to the nearest of 2^bits levels.

    Levels are uniform on [-clip, clip] (endpoints included); out-of-range
    entries saturate.
    """
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    levels = 2 ** bits
    step = 2.0 * clip / (levels - 1)

    def snap(x):
        idx = np.clip(np.rint((x + clip) / step), 0, levels - 1)
        return -clip + idx * step

    m = channels.matrices
    rec = snap(m.real) + 1j * snap(m.imag)
    cfg_bits = 2 * channels.K * channels.n_t * channels.n_r * bits
    return QuantizedChannelSet(ChannelSet(rec), "SQ", float(cfg_bits))


def vector_quantize_channels(channels, bits, rng):
    """RVQ of each stacked channel matrix on the n_t*n_r sphere.

    Each user owns one fresh random codebook of 2^bits entries shared
    across its K matrices; the norm is carried exactly and the codeword is
    reshaped back column-wise.
    """
    if not 1 <= bits <= 20:
        raise ValueError(f"bits must be in [1, 20], got {bits}")
    U, K, n_r, n_t = channels.matrices.shape
    rec = np.empty_like(channels.matrices)
    for m in range(U):
        cb = build_codebook(bits, n_t * n_r, rng, owner=m)
        for l in range(K):
            vec = channels.get(m, l).reshape(-1, order="F")
            nrm = np.linalg.norm(vec)
            if nrm == 0:
                rec[m, l] = 0
                continue
            _, word, _ = quantize(vec / nrm, cb)
            rec[m, l] = (nrm * word).reshape(n_r, n_t, order="F")
    return QuantizedChannelSet(ChannelSet(rec), "VQ", float(K * bits))


def run_centralized_ia(quantized, cfg, max_iters, rng=None, decision=None):
    """Run the alternation at a central unit on reconstructed channels.

    Receive filters and beamformers are both derived from the quantized
    reconstruction (the center never sees the true channels); the caller
    evaluates rates by applying the returned filters to the true channels.
    With an unquantized input this reproduces the distributed perfect-CSI
    trajectory exactly.
    """
    if rng is None and decision is None:
        raise ValueError("either a decision or an rng for user selection is required")
    return run_algorithm1(quantized.channels, cfg, math.inf, max_iters, rng,
                          decision=decision)

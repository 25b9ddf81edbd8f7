"""Random vector quantization of effective channels.

Each user owns a codebook of 2^B isotropic unit vectors.  After fixing a
receive filter u, the user's effective channel to cell l is H[.,l]^H u; its
direction is quantized to the codeword minimizing the squared chordal
distance 1 - |<h, v>|^2, while the gain mu = ||H^H u|| is reported exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import sample_complex_gaussian_matrix

__all__ = [
    "Codebook",
    "EffectiveChannel",
    "FeedbackReport",
    "build_codebook",
    "effective_channel",
    "quantize",
    "quantize_batch",
    "quantize_prefix",
    "squared_chordal_errors",
    "collect_feedback",
]

MAX_CODEBOOK_BITS = 24


@dataclass(frozen=True)
class Codebook:
    """2^bits unit vectors in C^{n_t}, owned by a single user."""

    bits: int
    entries: np.ndarray  # (2**bits, n_t) complex, unit rows
    owner: int = -1

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError(f"bits must be >= 0, got {self.bits}")
        if self.entries.ndim != 2 or self.entries.shape[0] != 2 ** self.bits:
            raise ValueError(
                f"codebook with bits={self.bits} needs {2 ** self.bits} entries, "
                f"got shape {self.entries.shape}"
            )

    @property
    def n_t(self):
        return self.entries.shape[1]

    def __len__(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class EffectiveChannel:
    """Polar form of H^H u: unit direction and nonnegative gain."""

    direction: np.ndarray
    gain: float
    degenerate: bool = False  # gain was exactly zero; direction is arbitrary

    def vector(self):
        return self.gain * self.direction


@dataclass
class FeedbackReport:
    """Quantized effective channels of a set of users toward all K cells."""

    users: tuple
    indices: np.ndarray     # (n_users, K) int, codeword index (-1 = unquantized)
    directions: np.ndarray  # (n_users, K, n_t) complex unit vectors
    gains: np.ndarray       # (n_users, K) float
    errors: np.ndarray      # (n_users, K) float, squared chordal distance
    bits: object = None     # bits per entry (int), or None for unquantized
    _row: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._row = {u: i for i, u in enumerate(self.users)}

    @property
    def K(self):
        return self.indices.shape[1]

    def direction(self, user, cell):
        return self.directions[self._row[user], cell]

    def gain(self, user, cell):
        return float(self.gains[self._row[user], cell])

    def error(self, user, cell):
        return float(self.errors[self._row[user], cell])

    def quantized_vector(self, user, cell):
        """mu * v, the scaled quantized effective channel."""
        r = self._row[user]
        return self.gains[r, cell] * self.directions[r, cell]

    def has_user(self, user):
        return user in self._row


def build_codebook(bits, n_t, rng, owner=-1):
    """Draw a fresh random codebook of 2^bits isotropic unit vectors."""
    if not 1 <= bits <= MAX_CODEBOOK_BITS:
        raise ValueError(f"bits must be in [1, {MAX_CODEBOOK_BITS}], got {bits}")
    entries = sample_complex_gaussian_matrix(2 ** bits, n_t, rng)
    entries /= np.linalg.norm(entries, axis=1, keepdims=True)
    return Codebook(bits=bits, entries=entries, owner=owner)


def effective_channel(H, u):
    """Project the channel onto a receive filter: returns (direction, gain).

    The gain is ||H^H u||; a zero gain is flagged as degenerate and the
    direction defaults to the first basis vector.
    """
    hh = H.conj().T @ np.asarray(u)
    mu = float(np.linalg.norm(hh))
    if mu == 0.0:
        direction = np.zeros(H.shape[1], dtype=np.complex128)
        direction[0] = 1.0
        return EffectiveChannel(direction=direction, gain=0.0, degenerate=True)
    return EffectiveChannel(direction=hh / mu, gain=mu)


def squared_chordal_errors(entries, h):
    """1 - |<h, v>|^2 against every codeword row of ``entries``."""
    overlap = np.abs(entries @ np.conj(h)) ** 2
    return np.maximum(1.0 - overlap, 0.0)


def quantize(h, codebook):
    """Chordal-distance quantization of a unit vector.

    Returns ``(index, codeword, error)`` where error is the attained
    squared chordal distance; ties break toward the lowest index.
    """
    overlap = np.abs(codebook.entries @ np.conj(h)) ** 2
    idx = int(np.argmax(overlap))
    return idx, codebook.entries[idx], float(max(1.0 - overlap[idx], 0.0))


def quantize_batch(directions, codebook):
    """Quantize several unit vectors against one codebook in a single pass.

    Equivalent to calling :func:`quantize` per row of ``directions`` but
    with one codebook sweep, which dominates the run time for large books.
    Returns (indices, codewords, errors).
    """
    overlap = np.abs(codebook.entries @ np.conj(directions.T)) ** 2  # (2^B, n)
    idx = np.argmax(overlap, axis=0)
    words = codebook.entries[idx]
    errs = np.maximum(1.0 - overlap[idx, np.arange(directions.shape[0])], 0.0)
    return idx.astype(np.int64), words, errs


def quantize_prefix(entries, directions, bits_list):
    """Quantize against the nested prefix codebooks of one entry table.

    The first 2^B rows of an i.i.d. isotropic entry table form a valid
    B-bit codebook, so sweeping the full table once serves every requested
    budget: for each B in ``bits_list`` the argmax is restricted to the
    prefix.  Returns ``{B: (indices, errors)}`` with one entry per budget;
    ``directions`` has shape (n, n_t).  The scan runs in the entries'
    dtype (a complex64 table halves the memory traffic; errors are still
    exact to that precision).
    """
    directions = np.ascontiguousarray(directions, dtype=entries.dtype)
    overlap = np.abs(entries @ directions.conj().T) ** 2  # (2^Bmax, n)
    cols = np.arange(directions.shape[0])
    out = {}
    for bits in bits_list:
        size = 2 ** int(bits)
        if size > entries.shape[0]:
            raise ValueError(f"prefix of 2^{bits} entries exceeds the table size")
        idx = np.argmax(overlap[:size], axis=0)
        errs = np.maximum(1.0 - overlap[idx, cols], 0.0).astype(np.float64)
        out[int(bits)] = (idx.astype(np.int64), errs)
    return out


def collect_feedback(channels, filters, codebooks=None, users=None):
    """Assemble the quantized-CSI collection for the given users.

    Parameters
    ----------
    channels : ChannelSet
    filters : dict user -> unit receive filter (n_r,)
    codebooks : dict user -> Codebook, or None for the unquantized
        (infinite-bits) report used by perfect-CSI runs.
    users : iterable of user ids; defaults to the keys of ``filters``.
    """
    if users is None:
        users = sorted(filters)
    users = tuple(users)
    K = channels.K
    n_t = channels.n_t
    indices = np.full((len(users), K), -1, dtype=np.int64)
    directions = np.empty((len(users), K, n_t), dtype=np.complex128)
    gains = np.empty((len(users), K), dtype=np.float64)
    errors = np.zeros((len(users), K), dtype=np.float64)
    bits = None
    for i, m in enumerate(users):
        if m not in filters:
            raise ValueError(f"no receive filter supplied for user {m}")
        u = filters[m]
        true_dirs = np.empty((K, n_t), dtype=np.complex128)
        for l in range(K):
            eff = effective_channel(channels.get(m, l), u)
            if eff.degenerate:
                raise ValueError(f"degenerate (zero-gain) effective channel for user {m}, cell {l}")
            gains[i, l] = eff.gain
            true_dirs[l] = eff.direction
        if codebooks is None:
            directions[i] = true_dirs
        else:
            cb = codebooks[m]
            bits = cb.bits
            idx, words, errs = quantize_batch(true_dirs, cb)
            indices[i] = idx
            directions[i] = words
            errors[i] = errs
    return FeedbackReport(users=users, indices=indices, directions=directions,
                          gains=gains, errors=errors, bits=bits)

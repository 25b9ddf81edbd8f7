"""Complex linear-algebra and random-sampling kernel.

Everything downstream (channel generation, quantization, the alternating
beamformer optimization) is built on the four primitives in this module:
a self-contained Hermitian eigensolver, an orthonormal-complement
constructor, and two samplers.  The eigensolver is a cyclic complex Jacobi
iteration; matrices in this simulator never exceed ~10x10, so robustness
and reproducibility matter more than speed.
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

__all__ = [
    "rng_stream",
    "hermitian_eig",
    "null_space",
    "sample_isotropic_unit",
    "sample_complex_gaussian_matrix",
]

#: Relative Frobenius asymmetry above which a matrix is rejected as
#: non-Hermitian.
HERMITIAN_RTOL = 1e-10


def rng_stream(seed, stream_id=0):
    """Return an independent random generator for (seed, stream_id).

    Identical pairs reproduce identical draws; distinct stream ids (ints or
    int tuples) give statistically independent streams (numpy SeedSequence
    keying).  One stream per Monte Carlo trial.
    """
    if isinstance(stream_id, (tuple, list)):
        key = (int(seed),) + tuple(int(s) for s in stream_id)
    else:
        key = (int(seed), int(stream_id))
    return np.random.default_rng(np.random.SeedSequence(key))


@njit(cache=True)
def _jacobi_sweeps(a, v, tol):
    """Cyclic complex Jacobi rotations, in place.

    Annihilates off-diagonal entries of the Hermitian matrix ``a`` while
    accumulating the unitary ``v`` (columns become eigenvectors).  Stops
    when the off-diagonal Frobenius mass falls below ``tol`` times the
    total Frobenius mass.
    """
    n = a.shape[0]
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += abs(a[i, j]) ** 2
    if fro2 == 0.0:
        return 0
    thresh2 = (tol * tol) * fro2
    for sweep in range(60):
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += abs(a[p, q]) ** 2
        if off2 <= thresh2:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b == 0.0:
                    continue
                eiph = apq / b
                app = a[p, p].real
                aqq = a[q, q].real
                theta = 0.5 * math.atan2(2.0 * b, aqq - app)
                c = math.cos(theta)
                s = math.sin(theta)
                se = s * eiph
                sec = s * eiph.conjugate()
                # A <- A U  (columns p, q)
                for i in range(n):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - sec * aiq
                    a[i, q] = se * aip + c * aiq
                # A <- U^H A  (rows p, q)
                for j in range(n):
                    apj = a[p, j]
                    aqj = a[q, j]
                    a[p, j] = c * apj - se * aqj
                    a[q, j] = sec * apj + c * aqj
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = complex(a[p, p].real, 0.0)
                a[q, q] = complex(a[q, q].real, 0.0)
                # V <- V U
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - sec * viq
                    v[i, q] = se * vip + c * viq
    return 60


def hermitian_eig(a):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    a : (n, n) array_like, complex
        Hermitian matrix (relative asymmetry below 1e-10).

    Returns
    -------
    eigenvalues : (n,) float ndarray, ascending.
    eigenvectors : (n, n) complex ndarray
        Orthonormal columns, ``eigenvectors[:, i]`` belonging to
        ``eigenvalues[i]``.  Each column's phase is normalized so its
        largest-magnitude entry is real and positive, which makes results
        reproducible across runs and platforms.

    Raises
    ------
    ValueError
        If the input is not square or not Hermitian within tolerance.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    fro = np.linalg.norm(a)
    asym = np.linalg.norm(a - a.conj().T)
    if asym > HERMITIAN_RTOL * max(fro, 1.0):
        raise ValueError(f"matrix is not Hermitian (relative asymmetry {asym / max(fro, 1e-300):.2e})")
    n = a.shape[0]
    work = 0.5 * (a + a.conj().T)
    vecs = np.eye(n, dtype=np.complex128)
    _jacobi_sweeps(work, vecs, 1e-14)
    vals = np.real(np.diag(work)).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    # deterministic phase: largest-magnitude component real-positive
    for i in range(n):
        col = vecs[:, i]
        j = int(np.argmax(np.abs(col)))
        piv = col[j]
        if abs(piv) > 0:
            vecs[:, i] = col * (piv.conjugate() / abs(piv))
    return vals, vecs


def null_space(rows, dim=None):
    """Orthonormal basis of the orthogonal complement of ``rows``.

    Parameters
    ----------
    rows : (k, d) array_like, complex
        Vectors whose joint orthogonal complement is wanted; ``k`` may be 0.
    dim : int, optional
        Ambient dimension ``d``; required when ``rows`` cannot carry it
        (e.g. an empty list).

    Returns
    -------
    (d, d - rank) complex ndarray
        Columns form an orthonormal basis ``b`` with ``<r, b> = 0`` within
        1e-10 for every input row ``r``.  Zero columns (rows spanning the
        whole space) is signalled by the shape, not an error.
    """
    rows = np.asarray(rows, dtype=np.complex128)
    if rows.size == 0:
        if dim is None and rows.ndim == 2:
            dim = rows.shape[1]
        if dim is None:
            raise ValueError("dim is required for empty input")
        return np.eye(int(dim), dtype=np.complex128)
    if rows.ndim == 1:
        rows = rows[None, :]
    d = rows.shape[1]
    if dim is not None and int(dim) != d:
        raise ValueError(f"dim={dim} does not match row length {d}")

    def orthogonalize(vec, basis):
        # two Gram-Schmidt passes keep residual components at machine level
        for _ in range(2):
            for q in basis:
                vec = vec - q * np.vdot(q, vec)
        return vec

    span = []
    for r in rows:
        v = orthogonalize(r.astype(np.complex128), span)
        nrm = np.linalg.norm(v)
        if nrm > 1e-12 * max(1.0, np.linalg.norm(r)):
            span.append(v / nrm)
    rank = len(span)
    basis = []
    for j in range(d):
        if len(basis) == d - rank:
            break
        e = np.zeros(d, dtype=np.complex128)
        e[j] = 1.0
        v = orthogonalize(e, span + basis)
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            basis.append(v / nrm)
    if len(basis) != d - rank:  # pragma: no cover - cannot happen for exact arithmetic
        raise RuntimeError("complement construction lost a dimension")
    if not basis:
        return np.zeros((d, 0), dtype=np.complex128)
    return np.column_stack(basis)


def sample_isotropic_unit(dim, rng):
    """Draw a unit vector uniformly from the complex sphere S^{dim-1}."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    v = sample_complex_gaussian_matrix(dim, 1, rng)[:, 0]
    return v / np.linalg.norm(v)


def sample_complex_gaussian_matrix(rows, cols, rng):
    """Draw a (rows, cols) matrix of i.i.d. CN(0, 1) entries.

    Real and imaginary parts are N(0, 1/2) each, so E|h|^2 = 1 exactly.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {rows}x{cols}")
    z = rng.standard_normal((int(rows), int(cols), 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)

"""Standalone numerical checks for the supporting lemmas.

Each check draws its own samples, compares an empirical statistic against
the lemma's identity or bound with three standard errors of slack, and
returns a machine-readable report row.  The checks depend only on the
sampling and quantization primitives and share no state with the
simulator.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .feedback import Codebook, quantize, squared_chordal_errors
from .linalg import hermitian_eig, sample_complex_gaussian_matrix, sample_isotropic_unit

__all__ = [
    "LemmaReport",
    "check_chordal_identity",
    "check_qerror_moments",
    "check_reverse_jensen",
    "check_sphere_integral_bound",
    "reports_to_csv",
]

CSV_HEADER = "lemma,params,samples,statistic,stderr,lower,upper,passed"


@dataclass
class LemmaReport:
    """One validated statement: statistic vs bound, with slack bookkeeping."""

    lemma: str
    params: dict
    samples: int
    statistic: float
    stderr: float
    lower: float
    upper: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def csv_row(self):
        params = ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return (f"{self.lemma},{params},{self.samples},{self.statistic!r},"
                f"{self.stderr!r},{self.lower!r},{self.upper!r},{int(self.passed)}")


def reports_to_csv(reports, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in reports:
            fh.write(r.csv_row() + "\n")


def chordal_distance(x, y):
    """sqrt(1 - |<x, y>|^2) between unit vectors."""
    return math.sqrt(max(0.0, 1.0 - abs(np.vdot(x, y)) ** 2))


def check_chordal_identity(trials, n_t, rng, sample_points=10 ** 4, slack=0.05):
    """max_w | |<x,w>|^2 - |<y,w>|^2 | equals the chordal distance of x, y.

    The exact maximum is the largest-magnitude eigenvalue of
    x x^H - y y^H.  A sampled maximum approaches it from below and must
    come within ``slack``; since the objective depends on w only through
    its projection onto span{x, y}, the probes are drawn uniformly from
    that subspace's unit sphere (where the maximizer lives), so the gap
    closes at the same rate for every ambient dimension.
    """
    worst_dev = 0.0
    worst_short = 0.0
    for _ in range(trials):
        x = sample_isotropic_unit(n_t, rng)
        y = sample_isotropic_unit(n_t, rng)
        closed = chordal_distance(x, y)
        vals, _ = hermitian_eig(np.outer(x, x.conj()) - np.outer(y, y.conj()))
        eig_route = float(np.max(np.abs(vals)))
        worst_dev = max(worst_dev, abs(eig_route - closed))
        y_perp = y - x * np.vdot(x, y)
        nrm = np.linalg.norm(y_perp)
        basis = np.column_stack([x, y_perp / nrm]) if nrm > 1e-12 else x[:, None]
        coeff = sample_complex_gaussian_matrix(sample_points, basis.shape[1], rng)
        coeff /= np.linalg.norm(coeff, axis=1, keepdims=True)
        w = coeff @ basis.T  # unit vectors in span{x, y}
        sampled = float(np.max(np.abs(np.abs(w @ x.conj()) ** 2 - np.abs(w @ y.conj()) ** 2)))
        worst_short = max(worst_short, closed - sampled)
        if sampled > closed + 1e-10:
            worst_dev = math.inf
    passed = worst_dev < 1e-10 and worst_short < slack
    return LemmaReport(
        lemma="chordal_identity",
        params={"trials": trials, "n_t": n_t, "w_points": sample_points},
        samples=trials,
        statistic=worst_dev,
        stderr=0.0,
        lower=0.0,
        upper=1e-10,
        passed=passed,
        detail={"max_sampled_shortfall": worst_short, "shortfall_slack": slack},
    )


def quantization_error_cdf(x, n_t, bits):
    """Exact law of the minimum squared chordal distance over 2^bits codewords."""
    x = np.asarray(x, dtype=np.float64)
    return 1.0 - (1.0 - np.clip(x, 0.0, 1.0) ** (n_t - 1)) ** (2 ** bits)


def sample_quantization_errors(trials, n_t, bits, rng):
    """Quantization errors of isotropic directions against fresh codebooks.

    Uses the production quantizer end to end; one independent codebook per
    draw, exactly as the random-codebook analysis assumes.
    """
    size = 2 ** bits
    out = np.empty(trials)
    for i in range(trials):
        entries = sample_complex_gaussian_matrix(size, n_t, rng)
        entries /= np.linalg.norm(entries, axis=1, keepdims=True)
        h = sample_isotropic_unit(n_t, rng)
        if size == 1:
            out[i] = float(squared_chordal_errors(entries, h)[0])
        else:
            _, _, z = quantize(h, Codebook(bits=bits, entries=entries))
            out[i] = z
    return out


def check_qerror_moments(trials, n_t, bits, n, rng, ks_threshold=None):
    """Moment sandwich and exact law of the quantization error.

    ((n_t-1)/n_t 2^{-B/(n_t-1)})^n <= E[Z^n] <= (2^{-B/(n_t-1)})^n, with the
    empirical CDF Kolmogorov-Smirnov tested against
    1 - (1 - x^{n_t-1})^{2^B}.  The default KS threshold is 0.01 for runs
    of 1e5 samples or more and the 1% critical value otherwise.
    """
    if ks_threshold is None:
        ks_threshold = 0.01 if trials >= 10 ** 5 else 1.63 / math.sqrt(trials)
    z = sample_quantization_errors(trials, n_t, bits, rng)
    zn = z ** n
    stat = float(np.mean(zn))
    se = float(np.std(zn, ddof=1) / math.sqrt(trials))
    base = 2.0 ** (-bits / (n_t - 1))
    lower = ((n_t - 1) / n_t * base) ** n
    upper = base ** n
    ks = float(stats.kstest(z, lambda x: quantization_error_cdf(x, n_t, bits)).statistic)
    passed = (stat + 3 * se >= lower) and (stat - 3 * se <= upper) and ks < ks_threshold
    return LemmaReport(
        lemma="qerror_moments",
        params={"trials": trials, "n_t": n_t, "B": bits, "n": n},
        samples=trials,
        statistic=stat,
        stderr=se,
        lower=lower,
        upper=upper,
        passed=passed,
        detail={"ks_distance": ks, "ks_threshold": ks_threshold},
    )


def check_reverse_jensen(z_samples, c1_grid, f=None):
    """E[f(z)] >= f(c1 E[z]) / c1 * (1 - sqrt(E[z^2] / (c1 E[z]^2))).

    Holds for any positive random variable and any c1 > 0 when f is
    concave with f(0) = 0; checked with three standard errors of slack at
    every grid point.  Default f is log(1 + sqrt(x)).
    """
    if f is None:
        f = lambda x: np.log1p(np.sqrt(x))
    grid = [float(c) for c in c1_grid]
    if not grid or min(grid) <= 0:
        raise ValueError("c1 grid must be non-empty and positive")
    z = np.asarray(z_samples, dtype=np.float64)
    if np.any(z <= 0):
        z = z[z > 0]
    fz = f(z)
    lhs = float(np.mean(fz))
    se = float(np.std(fz, ddof=1) / math.sqrt(z.size))
    ez = float(np.mean(z))
    ez2 = float(np.mean(z ** 2))
    margins = []
    for c1 in grid:
        rhs = float(f(c1 * ez)) / c1 * (1.0 - math.sqrt(ez2 / (c1 * ez ** 2)))
        margins.append(lhs - rhs)
    worst = min(margins)
    passed = worst >= -3 * se
    return LemmaReport(
        lemma="reverse_jensen",
        params={"samples": z.size, "grid": f"{min(grid):g}..{max(grid):g}x{len(grid)}"},
        samples=int(z.size),
        statistic=worst,
        stderr=se,
        lower=0.0,
        upper=math.inf,
        passed=passed,
        detail={"lhs": lhs, "margins_min": worst},
    )


def sphere_overlap_moment_quadrature(n_t, m, lam):
    """Reference value of E[max{lam(2r^2 - 1), 0}^m] for |w_1| = r on the sphere.

    Integrates against the radial density 2(n_t-1)(1-r^2)^{n_t-2} r; exact
    for n_t = 2 where |w_2|^2 = 1 - |w_1|^2.
    """
    def integrand(r):
        val = lam * (2.0 * r * r - 1.0)
        return (val ** m if val > 0 else 0.0) * 2.0 * (n_t - 1) * (1 - r * r) ** (n_t - 2) * r

    val, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
    return val


def check_sphere_integral_bound(trials, n_t, m, rng, pairs=12):
    """Sandwich for E_w[max{|<x,w>|^2 - |<y,w>|^2, 0}^m] over isotropic w.

    4 2^{-n_t} / (n_t (n_t+1)) lam^m <= statistic <= lam^m with
    lam = sqrt(1 - |<x,y>|^2); for n_t = 2 the statistic must also match
    the quadrature reference.
    """
    const = 4.0 * 2.0 ** (-n_t) / (n_t * (n_t + 1))
    worst_low = math.inf
    worst_high = -math.inf
    max_quad_dev = 0.0
    se_last = 0.0
    for _ in range(pairs):
        x = sample_isotropic_unit(n_t, rng)
        y = sample_isotropic_unit(n_t, rng)
        lam = chordal_distance(x, y)
        w = sample_complex_gaussian_matrix(trials, n_t, rng)
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        vals = np.maximum(np.abs(w @ x.conj()) ** 2 - np.abs(w @ y.conj()) ** 2, 0.0) ** m
        stat = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(trials))
        se_last = se
        worst_low = min(worst_low, stat + 3 * se - const * lam ** m)
        worst_high = max(worst_high, stat - 3 * se - lam ** m)
        if n_t == 2:
            ref = sphere_overlap_moment_quadrature(n_t, m, lam)
            max_quad_dev = max(max_quad_dev, abs(stat - ref) - 3 * se)
    passed = worst_low >= 0 and worst_high <= 0 and max_quad_dev <= 0
    return LemmaReport(
        lemma="sphere_integral_bound",
        params={"trials": trials, "n_t": n_t, "m": m, "pairs": pairs},
        samples=trials * pairs,
        statistic=worst_low,
        stderr=se_last,
        lower=0.0,
        upper=math.inf,
        passed=passed,
        detail={"lower_const": const, "quad_excess_dev": max_quad_dev},
    )

"""Closed-form evaluators for the rate-loss bounds.

All three evaluators work in log base 2 so their values are comparable to
the simulator's rates (bits per channel use).  Gain moments can be
estimated empirically from simulation samples or taken from the analytic
preset (E[mu^2] = 1, E[mu^4] = n_r^2, E[mu^8]^(1/4) = n_r); both
conventions are exposed because the channel normalization they assume
differs (see ``empirical_moments``).
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundInputs",
    "empirical_moments",
    "preset_moments",
    "theorem1_bound",
    "corollary1_bound",
    "theorem2_bound",
]


@dataclass(frozen=True)
class BoundInputs:
    """Parameters and gain moments entering the bound evaluators."""

    B: float
    n_t: int
    n_r: int
    K: int
    P: float
    users_per_cell: int
    mu2: float
    mu4: float
    mu8: float
    moment_source: str = "empirical"

    def __post_init__(self):
        if min(self.mu2, self.mu4, self.mu8) <= 0:
            raise ValueError("gain moments must be positive")
        if self.mu4 < self.mu2 ** 2 * (1 - 1e-12):
            raise ValueError("E[mu^4] >= E[mu^2]^2 must hold (Jensen)")


def empirical_moments(mu_samples):
    """(E[mu^2], E[mu^4], E[mu^8]) from gain samples."""
    mu = np.asarray(mu_samples, dtype=np.float64).ravel()
    if mu.size == 0:
        raise ValueError("no gain samples supplied")
    return float(np.mean(mu ** 2)), float(np.mean(mu ** 4)), float(np.mean(mu ** 8))


def preset_moments(n_r):
    """Analytic moment bounds used by the corollary (unit-gain convention)."""
    return 1.0, float(n_r) ** 2, float(n_r) ** 4


def theorem1_bound(inputs):
    """Upper bound on E|r(., H) - r(., V)| for any fixed decision.

    2 log2(1 + P/2 [K(K-1) E[mu^4] 2^{-B/(n_t-1)}
                    + 2^{-B/(2(n_t-1))} (E[mu^8]^{1/4} + K E[mu^2]^{1/2})])
    """
    fast = 2.0 ** (-inputs.B / (inputs.n_t - 1))
    slow = 2.0 ** (-inputs.B / (2.0 * (inputs.n_t - 1)))
    inner = (
        inputs.K * (inputs.K - 1) * inputs.mu4 * fast
        + slow * (inputs.mu8 ** 0.25 + inputs.K * math.sqrt(inputs.mu2))
    )
    return 2.0 * math.log2(1.0 + 0.5 * inputs.P * inner)


def corollary1_bound(K, n_r, n_t, P, B):
    """(log-form, linear-form) upper bounds on the per-user rate loss.

    log form:    6 log2(P/2 [K^2 n_r^2 2^{-B/(n_t-1)} + (n_r+K) 2^{-B/(2(n_t-1))}])
    linear form: 3 P   [same bracket]
    The linear form dominates the log form wherever the latter is defined.
    """
    bracket = (
        K ** 2 * n_r ** 2 * 2.0 ** (-B / (n_t - 1))
        + (n_r + K) * 2.0 ** (-B / (2.0 * (n_t - 1)))
    )
    linear = 3.0 * P * bracket
    log_form = 6.0 * math.log2(0.5 * P * bracket) if bracket > 0 else -math.inf
    return log_form, linear


def theorem2_bound(inputs, c1_grid):
    """Lower bound on the expected per-user rate gap, maximized over c1 > 0.

    Each grid point contributes
        (1/c1)(1 - n_t^2 (n_t+1) / (4 sqrt(c1) (n_t-1) 2^{-n_t}))
        * log2(1 + (c1 P E[mu^2] / (S (1 + P E[mu^2])))
                    * sqrt(4 2^{-n_t} (n_t-1) / (n_t^2 (n_t+1)))
                    * 2^{-B/(2(n_t-1))})
        - log2(1 + P K sqrt(E[mu^4]) 2^{-B/(n_t-1)})
    and a vacuous (negative) maximum is clamped to 0.  Assumes the per-cell
    user count sits at the feasibility limit.
    """
    grid = [float(c) for c in c1_grid]
    if not grid:
        raise ValueError("c1 grid must be non-empty")
    if min(grid) <= 0:
        raise ValueError("c1 values must be positive")
    nt = inputs.n_t
    pmu = inputs.P * inputs.mu2
    radical = math.sqrt(4.0 * 2.0 ** (-nt) * (nt - 1) / (nt ** 2 * (nt + 1)))
    slow = 2.0 ** (-inputs.B / (2.0 * (nt - 1)))
    fast = 2.0 ** (-inputs.B / (nt - 1))
    penalty = math.log2(1.0 + inputs.P * inputs.K * math.sqrt(inputs.mu4) * fast)
    best = -math.inf
    for c1 in grid:
        prefactor = (1.0 / c1) * (
            1.0 - nt ** 2 * (nt + 1) / (4.0 * math.sqrt(c1) * (nt - 1) * 2.0 ** (-nt))
        )
        gain_term = math.log2(
            1.0 + (c1 * pmu / (inputs.users_per_cell * (1.0 + pmu))) * radical * slow
        )
        best = max(best, prefactor * gain_term - penalty)
    return max(best, 0.0)

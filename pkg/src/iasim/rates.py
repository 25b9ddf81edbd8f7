"""Shannon rates under perfect and quantized CSI, and the per-user rate gap.

Rates are in bits per channel use (log base 2).  The perfect-CSI rate
optimizes the receive filter in closed form (MVDR); the quantized-CSI rate
is the base-station estimate built from reported gains and directions with
the user's filter implicit.
"""

import itertools
import math

import numpy as np

from .channel import ChannelSet
from .feedback import FeedbackReport

__all__ = [
    "ScaleGuardError",
    "mvdr_filter_and_rate",
    "user_rate_perfect",
    "user_rate_fixed_filter",
    "user_rate_quantized",
    "sum_rate",
    "rate_gap",
    "brute_force_schedule",
]


class ScaleGuardError(ValueError):
    """Exhaustive scheduling was requested on a system too large to enumerate."""


def _interference_columns(decision, channels, cfg, m, b):
    cols = []
    for l, sl in enumerate(decision.cells):
        for k in sl:
            if (l, k) == (b, m):
                continue
            cols.append(math.sqrt(cfg.P / len(sl)) * (channels.get(m, l) @ decision.beamformers[k]))
    return cols


def mvdr_filter_and_rate(decision, channels, cfg, m):
    """Optimal receive filter and the rate it attains for user ``m``.

    The maximal SINR over unit filters is (P/|S_b|) h^H M^{-1} h with
    M = I + sum of scaled interferer outer products, attained by the
    normalized solution of M u = h.
    """
    b = decision.cell_of(m)
    h = channels.get(m, b) @ decision.beamformers[m]
    cols = _interference_columns(decision, channels, cfg, m, b)
    M = np.eye(channels.n_r, dtype=np.complex128)
    if cols:
        G = np.column_stack(cols)
        M += G @ G.conj().T
    w = np.linalg.solve(M, h)
    sinr = (cfg.P / decision.size(b)) * float(np.real(np.vdot(h, w)))
    nrm = np.linalg.norm(w)
    u = w / nrm if nrm > 0 else np.eye(channels.n_r, dtype=np.complex128)[:, 0]
    return u, math.log2(1.0 + max(sinr, 0.0))


def user_rate_perfect(decision, channels, cfg, m):
    """Rate of user ``m`` with the receive filter optimized over the sphere."""
    return mvdr_filter_and_rate(decision, channels, cfg, m)[1]


def user_rate_fixed_filter(decision, channels, cfg, m, u):
    """Rate of user ``m`` when the receive filter ``u`` is imposed."""
    b = decision.cell_of(m)
    h = channels.get(m, b) @ decision.beamformers[m]
    num = (cfg.P / decision.size(b)) * abs(np.vdot(u, h)) ** 2
    den = 1.0
    for col in _interference_columns(decision, channels, cfg, m, b):
        den += abs(np.vdot(u, col)) ** 2
    return math.log2(1.0 + num / den)


def user_rate_quantized(decision, report, cfg, m):
    """Base-station rate estimate for user ``m`` from the feedback report.

    Uses the reported gain mu and direction v of every scheduled user's
    effective channel; the receive filter that produced the report is
    implicit.
    """
    if not report.has_user(m):
        raise ValueError(f"feedback report does not cover user {m}")
    b = decision.cell_of(m)
    num = (cfg.P * report.gain(m, b) ** 2 / decision.size(b)) * (
        abs(np.vdot(report.direction(m, b), decision.beamformers[m])) ** 2
    )
    den = 1.0
    for l, sl in enumerate(decision.cells):
        for k in sl:
            if (l, k) == (b, m):
                continue
            den += (cfg.P * report.gain(m, l) ** 2 / len(sl)) * (
                abs(np.vdot(report.direction(m, l), decision.beamformers[k])) ** 2
            )
    return math.log2(1.0 + num / den)


def sum_rate(decision, source, cfg):
    """System sum rate under perfect (ChannelSet) or quantized (report) CSI."""
    if isinstance(source, ChannelSet):
        return sum(user_rate_perfect(decision, source, cfg, m) for m in decision.scheduled)
    if isinstance(source, FeedbackReport):
        return sum(user_rate_quantized(decision, source, cfg, m) for m in decision.scheduled)
    raise TypeError(f"unsupported CSI source {type(source).__name__}")


def rate_gap(r_perfect, r_quantized_true, r_quantized_estimate):
    """Per-user throughput loss of quantized-CSI operation.

    r_perfect is the rate of the perfect-CSI decision on true channels;
    the quantized-CSI decision contributes both its true rate and the
    base-station estimate it would be link-adapted to.  May be negative
    on individual frames.
    """
    return r_perfect - min(r_quantized_true, r_quantized_estimate)


def _assignments(users, K, S):
    """Yield all ordered partitions of ``users`` into K disjoint S-sets."""
    if K == 0:
        yield ()
        return
    for first in itertools.combinations(users, S):
        rest = [u for u in users if u not in first]
        for tail in _assignments(rest, K - 1, S):
            yield (tuple(first),) + tail


def brute_force_schedule(source, cfg, strategy, per_cell=None, max_combinations=10 ** 5):
    """Exhaustive sum-rate-optimal user selection.

    Parameters
    ----------
    source : ChannelSet or FeedbackReport
        CSI the scheduler is allowed to see; also the CSI the candidate
        sum rates are evaluated on.
    strategy : callable(SchedulingDecision) -> None
        Fills ``decision.beamformers`` for a candidate user selection.
    per_cell : int, optional
        Users per cell; defaults to the feasibility maximum.

    Returns the best decision; ties resolve to the lexicographically first
    assignment.  Raises ScaleGuardError when the enumeration would exceed
    ``max_combinations``.
    """
    from .ia import SchedulingDecision, max_users_per_cell  # local: avoids cycle

    S = per_cell if per_cell is not None else min(max_users_per_cell(cfg), cfg.U // cfg.K)
    if S < 1:
        raise ValueError("per_cell must be >= 1")
    count = 1
    remaining = cfg.U
    for _ in range(cfg.K):
        count *= math.comb(remaining, S)
        remaining -= S
    if count > max_combinations:
        raise ScaleGuardError(
            f"{count} candidate assignments exceed the {max_combinations} guard; "
            "use random selection instead"
        )
    best = None
    best_rate = -math.inf
    for cells in _assignments(tuple(range(cfg.U)), cfg.K, S):
        decision = SchedulingDecision(cells=cells)
        strategy(decision)
        r = sum_rate(decision, source, cfg)
        if r > best_rate:
            best, best_rate = decision, r
    return best

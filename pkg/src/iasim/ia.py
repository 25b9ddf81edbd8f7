"""Minimum-interference alternation with user selection.

One iteration alternates two rounds over all cells: every scheduled user
computes its receive filter as the weakest eigenvector of the out-of-cell
interference covariance (true channels, via dedicated pilots), quantizes
and reports its effective channels; every base station then picks the
transmit subspace spanned by the weakest eigenvectors of the reciprocal
interference covariance and zero-forces the in-cell reported directions.

The residual-interference trace records the total leaked power at the
receive-filter outputs, measured on the true channels, after each full
iteration.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .feedback import build_codebook, collect_feedback
from .linalg import hermitian_eig, null_space

__all__ = [
    "ConfigurationError",
    "DegenerateFeedbackError",
    "SchedulingDecision",
    "IAState",
    "max_users_per_cell",
    "select_users",
    "init_beamformers",
    "out_of_cell_covariance",
    "receive_filter",
    "transmit_subspace",
    "zero_force",
    "residual_interference",
    "run_algorithm1",
]

#: Residual interference below this power is reported as the dB floor.
DB_FLOOR = -200.0
_POWER_FLOOR = 10.0 ** (DB_FLOOR / 10.0)


class ConfigurationError(ValueError):
    """The system dimensions admit no feasible alignment schedule."""


class DegenerateFeedbackError(RuntimeError):
    """Reported in-cell directions were collinear; zero-forcing has no room."""


@dataclass
class SchedulingDecision:
    """Disjoint per-cell user sets plus the current beamformer map."""

    cells: tuple  # tuple of tuples of user ids, one per base station
    beamformers: dict = field(default_factory=dict)  # user -> unit (n_t,) vector

    def __post_init__(self):
        seen = set()
        for sb in self.cells:
            for m in sb:
                if m in seen:
                    raise ValueError(f"user {m} scheduled in more than one cell")
                seen.add(m)

    @property
    def K(self):
        return len(self.cells)

    @property
    def scheduled(self):
        return tuple(m for sb in self.cells for m in sb)

    def cell_of(self, user):
        for b, sb in enumerate(self.cells):
            if user in sb:
                return b
        raise ValueError(f"user {user} is not scheduled")

    def size(self, b):
        return len(self.cells[b])


@dataclass
class IAState:
    """Output of the alternation: final decision, filters, and the trace."""

    decision: SchedulingDecision
    filters: dict                 # user -> unit (n_r,) receive filter
    iterations: int
    trace_db: list                # residual interference per iteration, dB
    report: object = None         # last FeedbackReport (None before iteration 1)
    zf_residual_max: list = field(default_factory=list)  # per iteration
    snapshots: dict = field(default_factory=dict)        # iteration -> beamformer map


def max_users_per_cell(cfg):
    """Largest per-cell user count for which alignment stays feasible."""
    return int((2 * cfg.n_t - 1) // cfg.K)


def select_users(cfg, rng):
    """Randomly assign S = min((2 n_t - 1)//K, U//K) users to each cell."""
    S = min(max_users_per_cell(cfg), cfg.U // cfg.K)
    if S < 1:
        raise ConfigurationError(
            f"no feasible schedule for K={cfg.K}, U={cfg.U}, n_t={cfg.n_t}"
        )
    perm = rng.permutation(cfg.U)
    cells = tuple(
        tuple(sorted(int(u) for u in perm[b * S:(b + 1) * S])) for b in range(cfg.K)
    )
    return SchedulingDecision(cells=cells)


def init_beamformers(decision, n_t):
    """All-ones starting beamformer (1,...,1)/sqrt(n_t) for every user."""
    flat = np.ones(n_t, dtype=np.complex128) / math.sqrt(n_t)
    decision.beamformers = {m: flat.copy() for m in decision.scheduled}
    return decision.beamformers


def out_of_cell_covariance(user, cell, channels, decision):
    """Covariance of the interference arriving at ``user`` from other cells."""
    n_r = channels.n_r
    theta = np.zeros((n_r, n_r), dtype=np.complex128)
    for l, sl in enumerate(decision.cells):
        if l == cell:
            continue
        if not sl:
            continue
        beams = np.column_stack([decision.beamformers[k] for k in sl])
        g = channels.get(user, l) @ beams  # (n_r, |S_l|)
        theta += g @ g.conj().T
    return theta


def receive_filter(theta):
    """Unit filter attaining the smallest interference power u^H Theta u."""
    _, vecs = hermitian_eig(theta)
    return vecs[:, 0]


def transmit_subspace(cell, report, decision):
    """Orthonormal n_t x |S_b| basis with minimum reciprocal interference.

    Columns are the eigenvectors of the reciprocal covariance (built from
    the scaled quantized directions of all out-of-cell scheduled users)
    belonging to its |S_b| smallest eigenvalues.
    """
    outsiders = [m for l, sl in enumerate(decision.cells) if l != cell for m in sl]
    if outsiders:
        vhat = np.column_stack([report.quantized_vector(m, cell) for m in outsiders])
        theta_rev = vhat @ vhat.conj().T
    else:
        n_t = report.directions.shape[2]
        theta_rev = np.zeros((n_t, n_t), dtype=np.complex128)
    _, vecs = hermitian_eig(theta_rev)
    return vecs[:, : decision.size(cell)]


def zero_force(cell, subspace, report, decision):
    """In-cell zero-forcing inside the transmit subspace.

    For each user m of the cell, the beamformer is subspace @ w with w a
    unit vector orthogonal to the reported directions of every co-scheduled
    user, so the quantized in-cell interference is exactly nulled.

    Returns the largest residual |<v_k, pi(m)>| over nulled pairs.
    """
    sb = decision.cells[cell]
    residual = 0.0
    new = {}
    for m in sb:
        rows = [np.conj(report.direction(k, cell).conj() @ subspace)
                for k in sb if k != m]
        rows = np.array(rows) if rows else np.zeros((0, subspace.shape[1]), complex)
        basis = null_space(rows, dim=subspace.shape[1])
        if basis.shape[1] == 0:
            raise DegenerateFeedbackError(
                f"in-cell reported directions of cell {cell} leave no zero-forcing room"
            )
        new[m] = subspace @ basis[:, 0]
    for m in sb:
        decision.beamformers[m] = new[m]
        for k in sb:
            if k != m:
                residual = max(residual, abs(np.vdot(report.direction(k, cell), new[m])))
    return residual


def residual_interference(state, channels, cfg):
    """Total leaked power (dB) at the receive-filter outputs, true channels.

    Sums (P/|S_l|) |<u_m, H_{m,l} pi(k)>|^2 over every scheduled pair
    (l, k) != (b, m), intra-cell terms included.  Power below the floor is
    clamped to -200 dB.
    """
    decision = state.decision
    total = 0.0
    for b, sb in enumerate(decision.cells):
        for m in sb:
            u = state.filters[m]
            for l, sl in enumerate(decision.cells):
                if not sl:
                    continue
                beams = np.column_stack([decision.beamformers[k] for k in sl])
                row = u.conj() @ (channels.get(m, l) @ beams)
                powers = np.abs(row) ** 2
                if l == b:
                    powers[list(sl).index(m)] = 0.0
                total += (cfg.P / len(sl)) * float(np.sum(powers))
    return 10.0 * math.log10(max(total, _POWER_FLOOR))


def _feasibility_guard(decision, cfg):
    limit = max_users_per_cell(cfg)
    for b, sb in enumerate(decision.cells):
        if len(sb) > limit:
            raise ConfigurationError(
                f"cell {b} schedules {len(sb)} users; feasibility allows at most {limit}"
            )


def run_algorithm1(channels, cfg, bits, max_iters, rng, decision=None,
                   codebooks=None, tol_db=None, snapshot_iters=()):
    """Alternating receive-filter / transmit-beamformer optimization.

    Parameters
    ----------
    channels : ChannelSet
    cfg : SystemConfig
    bits : int or math.inf/None
        Feedback budget per user per cell per iteration; infinite bypasses
        the quantizer (reported direction = true effective direction).
    max_iters : int
    rng : numpy Generator
        Drives user selection (when ``decision`` is None) and codebook
        generation (when ``codebooks`` is None).
    decision : SchedulingDecision, optional
        Pre-selected user sets (beamformers are reinitialized).
    codebooks : dict user -> Codebook, optional
        Per-user codebooks to reuse; fresh ones are drawn otherwise.
    tol_db : float, optional
        Stop early once the trace improves by less than this many dB.
    snapshot_iters : iterable of int, optional
        Iterations whose beamformer maps are copied into state.snapshots.

    Returns
    -------
    IAState with the per-iteration residual-interference trace (entry 0 is
    the initial state: flat beamformers and flat receive filters).
    """
    perfect = bits is None or bits == math.inf
    if decision is None:
        decision = select_users(cfg, rng)
    _feasibility_guard(decision, cfg)
    init_beamformers(decision, cfg.n_t)
    users = decision.scheduled
    if not perfect and codebooks is None:
        codebooks = {m: build_codebook(int(bits), cfg.n_t, rng, owner=m) for m in users}
    flat_u = np.ones(cfg.n_r, dtype=np.complex128) / math.sqrt(cfg.n_r)
    filters = {m: flat_u.copy() for m in users}
    state = IAState(decision=decision, filters=filters, iterations=0, trace_db=[])
    state.trace_db.append(residual_interference(state, channels, cfg))
    if 0 in snapshot_iters:
        state.snapshots[0] = {m: v.copy() for m, v in decision.beamformers.items()}
    for it in range(1, max_iters + 1):
        for b, sb in enumerate(decision.cells):
            for m in sb:
                filters[m] = receive_filter(
                    out_of_cell_covariance(m, b, channels, decision))
        state.report = collect_feedback(
            channels, filters, None if perfect else codebooks, users=users)
        zf_res = 0.0
        for b in range(decision.K):
            subspace = transmit_subspace(b, state.report, decision)
            zf_res = max(zf_res, zero_force(b, subspace, state.report, decision))
        state.zf_residual_max.append(zf_res)
        state.trace_db.append(residual_interference(state, channels, cfg))
        state.iterations = it
        if it in snapshot_iters:
            state.snapshots[it] = {m: v.copy() for m, v in decision.beamformers.items()}
        if tol_db is not None and state.trace_db[-2] - state.trace_db[-1] < tol_db:
            break
    return state

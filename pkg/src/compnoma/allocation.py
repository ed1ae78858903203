"""Power allocation: closed-form single-cell solve, coordinated fixed point,
and a brute-force grid oracle for cross-checking.

The single-cell solve walks the decode order front to back.  At each non-head
position the remaining budget P_rem will be spent entirely on this signal and
the ones after it (the head absorbs the residual), so the guarantee equation
and the decodability gap both have closed forms:

    t        = 2^(R/width) - 1
    p_rate   = t/(1+t) * (P_rem + max over decoders d of (X_d + 1)/g_d)
    p_sic    = (P_rem + p_tol/g_min)/2
    p        = max(p_rate, p_sic)

where the decoders of position k are every member at position >= k, g_min is
their smallest effective gain, and X_d is any fixed external interference at
decoder d (zero unless cross-cell terms are modeled).  Sizing against the
worst decoder keeps the signal decodable everywhere it must be cancelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import (
    NomaCluster,
    PowerAllocation,
    comp_user_rate_jt,
    noncomp_user_rate,
    sic_feasible,
    user_rate_single_cell,
)
from .channel import ChannelRealization
from .errors import ConditionViolation, DomainError

EQUAL_RECEIVED = "equal_received"
EQUAL_TRANSMIT = "equal_transmit"

_REL_SLACK = 1e-9  # guarantee re-check slack, matches the per-trial audit


@dataclass(frozen=True)
class AllocationProblem:
    """One cell's allocation inputs.

    gains holds each member's *effective* noise-normalized gain: the plain
    serving-cell gain for single-cell members, the combined received gain per
    unit of local power for jointly-transmitted members.  For coordinated
    solves, comp_cell_gains carries the raw per-cell gain table of the shared
    members ({user: {cell: gain}}), and cross_cell_gains the other-cell gains
    of single-cell members used when cross-cell interference is modeled.
    external_interference adds a fixed noise-normalized term to a member's
    denominator.
    """

    cluster: NomaCluster
    gains: Mapping[int, float]
    budget_mw: float
    p_tol: float
    band_width_hz: float | None = None
    external_interference: Mapping[int, float] = field(default_factory=dict)
    comp_cell_gains: Mapping[int, Mapping[int, float]] = field(default_factory=dict)
    cross_cell_gains: Mapping[int, Mapping[int, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.budget_mw <= 0.0:
            raise DomainError(f"budget must be positive, got {self.budget_mw}")
        if self.p_tol < 0.0:
            raise DomainError("p_tol cannot be negative")
        if self.band_width_hz is None:
            object.__setattr__(self, "band_width_hz", self.cluster.band.width_hz)
        if self.band_width_hz <= 0.0:
            raise DomainError("band width must be positive")
        for u in self.cluster.decode_order:
            if u not in self.gains:
                raise LookupError(f"no effective gain for cluster member {u}")
            if self.gains[u] < 0.0:
                raise DomainError(f"negative gain for user {u}")


def _demand_over(num: float, gain: float) -> float:
    """num/gain with a zero-gain decoder treated as an unservable demand."""
    if gain > 0.0:
        return num / gain
    return math.inf if num > 0.0 else 0.0


def allocate_single_cell(problem: AllocationProblem) -> PowerAllocation:
    """Minimal-power forward solve; the head takes the residual budget.

    Returns feasible=False (diagnostics name the binding position) when some
    position's requirement exceeds the remaining budget, or when an optional
    head guarantee is not met by the residual.
    """
    cluster = problem.cluster
    order = cluster.decode_order
    n = len(order)
    width = problem.band_width_hz
    g = [problem.gains[u] for u in order]
    x = [problem.external_interference.get(u, 0.0) for u in order]
    guarantees = cluster.rate_guarantees

    powers: dict[int, float] = {}
    p_rem = problem.budget_mw
    for k in range(n - 1):
        user = order[k]
        t = 2.0 ** (guarantees[user] / width) - 1.0
        demand = max(_demand_over(x[d] + 1.0, g[d]) for d in range(k, n))
        p_rate = t / (1.0 + t) * (p_rem + demand) if t > 0.0 else 0.0
        g_min = min(g[k:])
        p_sic = 0.5 * (p_rem + _demand_over(problem.p_tol, g_min))
        p = max(p_rate, p_sic)
        if p > p_rem or not math.isfinite(p):
            return PowerAllocation(
                powers={u: 0.0 for u in order},
                feasible=False,
                diagnostics=(f"infeasible_guarantee position={k} user={user}",),
            )
        powers[user] = p
        p_rem -= p
    head = order[-1]
    powers[head] = p_rem

    diagnostics: tuple[str, ...] = ()
    feasible = True
    if head in guarantees and guarantees[head] > 0.0:
        head_rate = width * math.log2(1.0 + powers[head] * g[-1] / (x[-1] + 1.0))
        if head_rate < guarantees[head] * (1.0 - _REL_SLACK):
            feasible = False
            diagnostics = (f"infeasible_guarantee position={n - 1} user={head} head_residual",)
    return PowerAllocation(powers=powers, feasible=feasible, diagnostics=diagnostics)


# --- coordinated (joint-transmission) allocation ---------------------------


def _shared_prefix(clusters: Sequence[NomaCluster]) -> tuple[int, ...]:
    """The jointly-served members, which must prefix every decode order."""
    shared = set(clusters[0].decode_order)
    for c in clusters[1:]:
        shared &= set(c.decode_order)
    prefix = tuple(u for u in clusters[0].decode_order if u in shared)
    q = len(prefix)
    for c in clusters:
        if tuple(c.decode_order[:q]) != prefix:
            raise ConditionViolation(
                2 if set(c.decode_order[:q]) == set(prefix) else 1,
                c.cell_id,
                c.decode_order,
                "shared members must lead every decode order in one common order",
            )
    return prefix


def allocate_jt(
    problems: Sequence[AllocationProblem],
    split: str = EQUAL_TRANSMIT,
    interference_mode: str = "negligible",
    max_iterations: int = 100,
    convergence_tol: float = 1e-12,
) -> list[PowerAllocation]:
    """Allocation across the cells of a coordination set.

    Walks the shared decode prefix position by position: sizes each shared
    member's required combined received power from its guarantee, net of what
    residual-absorbing head cells already contribute, splits the requirement
    over the non-head cells (equal received shares by default), and applies
    the same per-position decodability floors as the single-cell solve; each
    cell's single-cell tail is then solved with the shared prefix pinned.
    Because heads absorb the residual, each cell's total later-decoded power
    at any position equals its remaining budget, which makes every step
    closed-form: the pass lands on the fixed point in one sweep (so the
    convergence controls are interface compatibility, a repeat sweep cannot
    move the result).  The result is re-audited (guarantees, decodability,
    budgets) before being reported feasible.
    """
    if split not in (EQUAL_RECEIVED, EQUAL_TRANSMIT):
        raise DomainError(f"unknown split policy {split!r}")
    if interference_mode not in ("full", "negligible"):
        raise DomainError(f"unknown interference mode {interference_mode!r}")
    if max_iterations < 1:
        raise DomainError("max_iterations must be at least 1")
    if convergence_tol <= 0.0:
        raise DomainError("convergence_tol must be positive")
    if not problems:
        raise DomainError("allocate_jt needs at least one problem")
    if len(problems) == 1:
        return [allocate_single_cell(problems[0])]

    clusters = [p.cluster for p in problems]
    width = problems[0].band_width_hz
    p_tol = problems[0].p_tol
    for p in problems:
        if p.band_width_hz != width:
            raise DomainError("joint transmission requires one shared band width")
        if p.p_tol != p_tol:
            raise DomainError("p_tol must match across a coordination set")

    comp = _shared_prefix(clusters)
    q = len(comp)
    m_cells = len(problems)
    cell_ids = [c.cell_id for c in clusters]
    orders = [c.decode_order for c in clusters]
    sizes = [len(o) for o in orders]

    # raw per-cell gains of shared members; effective gains fall back to the
    # equal-received convention when no raw table was provided
    raw = [[0.0] * q for _ in range(m_cells)]
    for ci, problem in enumerate(problems):
        for k, u in enumerate(comp):
            table = problem.comp_cell_gains.get(u, {})
            if cell_ids[ci] in table:
                raw[ci][k] = table[cell_ids[ci]]
            elif split == EQUAL_RECEIVED:
                raw[ci][k] = problem.gains[u] / m_cells
            else:
                raise LookupError(f"raw per-cell gain required for user {u} under {split}")

    # guarantee of each shared member, taken from any cluster where it is not
    # the head (None when it heads every cluster)
    comp_guarantee: list[float | None] = []
    for k, u in enumerate(comp):
        value = None
        for c in clusters:
            if c.cluster_head != u and u in c.rate_guarantees:
                value = c.rate_guarantees[u]
                break
        comp_guarantee.append(value)
    head_cells = [
        [ci for ci in range(m_cells) if orders[ci][-1] == u] for u in comp
    ]
    nonhead_cells = [
        [ci for ci in range(m_cells) if ci not in head_cells[k]] for k in range(q)
    ]

    tail_gain = [
        [problems[ci].gains[u] for u in orders[ci][q:]] for ci in range(m_cells)
    ]
    tail_t = [
        [
            2.0 ** (clusters[ci].rate_guarantees.get(u, 0.0) / width) - 1.0
            for u in orders[ci][q:]
        ]
        for ci in range(m_cells)
    ]
    static_x = [
        [problems[ci].external_interference.get(u, 0.0) for u in orders[ci]]
        for ci in range(m_cells)
    ]
    cross_gamma = [
        [
            {
                oc: problems[ci].cross_cell_gains.get(u, {}).get(cell_ids[oc], 0.0)
                for oc in range(m_cells)
                if oc != ci
            }
            for u in orders[ci][q:]
        ]
        for ci in range(m_cells)
    ]

    pw = [[0.0] * sizes[ci] for ci in range(m_cells)]
    breach: str | None = None

    def effective_gain(ci: int, pos: int) -> float:
        """Per-unit-local-power received gain of a member, current pattern."""
        if pos >= q:
            return tail_gain[ci][pos - q]
        local = pw[ci][pos]
        combined = sum(pw[mi][pos] * raw[mi][pos] for mi in range(m_cells))
        if local > 0.0 and combined > 0.0:
            return combined / local
        if split == EQUAL_RECEIVED:
            return m_cells * raw[ci][pos]
        return sum(raw[mi][pos] for mi in range(m_cells))

    # Heads absorb their cell's residual, so whatever a cell transmits after
    # position k totals exactly its remaining budget there.  Each position's
    # requirement is therefore closed-form in the remaining budgets and one
    # forward pass lands on the fixed point; a repeat pass reproduces it
    # unchanged, so convergence is declared at the first sweep.
    rem = [problems[ci].budget_mw for ci in range(m_cells)]
    for k in range(q):
        u = comp[k]
        r = comp_guarantee[k]
        heads = head_cells[k]
        nonheads = nonhead_cells[k]
        need = 0.0
        if r is not None and r > 0.0:
            t = 2.0 ** (r / width) - 1.0
            # combined received power over all cells if non-head cells sent
            # nothing here, and what the residual-absorbing heads contribute
            total_weighted = math.fsum(raw[ci][k] * rem[ci] for ci in range(m_cells))
            head_delivery = math.fsum(raw[hi][k] * rem[hi] for hi in heads)
            need = max(
                0.0,
                t * (1.0 + static_x[0][k] + total_weighted) / (1.0 + t) - head_delivery,
            )
        if need > 0.0 and not nonheads:
            breach = f"infeasible_guarantee position={k} user={u} no_covering_cell"
            need = 0.0
        for ci in range(m_cells):
            n = sizes[ci]
            if ci in heads:
                p = rem[ci]
            else:
                if split == EQUAL_RECEIVED:
                    share = _demand_over(need / len(nonheads), raw[ci][k])
                else:
                    share = _demand_over(
                        need, math.fsum(raw[mi][k] for mi in nonheads)
                    )
                g_min = min(effective_gain(ci, d) for d in range(k, n))
                floor = 0.5 * (rem[ci] + _demand_over(p_tol, g_min))
                p = max(share, floor)
                if p > rem[ci] or not math.isfinite(p):
                    if breach is None:
                        breach = (
                            f"infeasible_guarantee position={k} user={u} "
                            f"cell={cell_ids[ci]}"
                        )
                    p = rem[ci]
            pw[ci][k] = p
            rem[ci] -= p

    # every cell's remaining budget is non-shared traffic from here on: the
    # cross-cell interference tail users see in full mode is already fixed
    nonshared = list(rem)
    for ci in range(m_cells):
        n = sizes[ci]
        for k in range(q, n):
            u = orders[ci][k]
            if k == n - 1:
                pw[ci][k] = rem[ci]
                rem[ci] = 0.0
                continue
            ti = k - q
            t = tail_t[ci][ti]
            demand = 0.0
            for d in range(k, n):
                x_d = static_x[ci][d]
                if interference_mode == "full":
                    for oc, gx in cross_gamma[ci][d - q].items():
                        x_d += nonshared[oc] * gx
                demand = max(demand, _demand_over(x_d + 1.0, tail_gain[ci][d - q]))
            p_rate = t / (1.0 + t) * (rem[ci] + demand) if t > 0.0 else 0.0
            g_min = min(tail_gain[ci][ti:])
            floor = 0.5 * (rem[ci] + _demand_over(p_tol, g_min))
            p = max(p_rate, floor)
            if p > rem[ci] or not math.isfinite(p):
                if breach is None:
                    breach = f"infeasible_guarantee position={k} user={u} cell={cell_ids[ci]}"
                p = rem[ci]
            pw[ci][k] = p
            rem[ci] -= p

    allocs = [
        PowerAllocation(
            powers={orders[ci][k]: pw[ci][k] for k in range(sizes[ci])},
            feasible=True,
            diagnostics=("converged iterations=1",),
        )
        for ci in range(m_cells)
    ]

    def fail(code: str) -> list[PowerAllocation]:
        return [
            PowerAllocation(powers=a.powers, feasible=False, diagnostics=(code,))
            for a in allocs
        ]

    if breach is not None:
        return fail(breach)

    # post-hoc audit: recompute every guaranteed rate with the converged
    # powers and the same rate formulas the trial evaluation uses
    table: dict[tuple[int, int], float] = {}
    for ci in range(m_cells):
        for k, u in enumerate(comp):
            table[(cell_ids[ci], u)] = raw[ci][k]
        for k, u in enumerate(orders[ci][q:]):
            table[(cell_ids[ci], u)] = tail_gain[ci][k]
            for oc_id, gx in problems[ci].cross_cell_gains.get(u, {}).items():
                table[(oc_id, u)] = gx
    realization = ChannelRealization(table)
    for ci in range(m_cells):
        cluster, alloc = clusters[ci], allocs[ci]
        others = [(clusters[mi], allocs[mi]) for mi in range(m_cells) if mi != ci]
        for u, r in cluster.rate_guarantees.items():
            if r <= 0.0:
                continue
            if u in comp:
                rate = comp_user_rate_jt(clusters, allocs, realization, u)
            else:
                rate = noncomp_user_rate(
                    cluster, alloc, realization, u, interference_mode, others
                )
            if rate < r * (1.0 - _REL_SLACK):
                return fail(f"guarantee_shortfall user={u} cell={cell_ids[ci]}")
        eff_map = {
            orders[ci][k]: effective_gain(ci, k) for k in range(sizes[ci])
        }
        if not sic_feasible(cluster, alloc, eff_map, p_tol):
            return fail(f"sic_gap cell={cell_ids[ci]}")
    return allocs


# --- brute-force oracle -----------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    allocation: PowerAllocation
    sum_rate_bps: float


def brute_force_oracle(problem: AllocationProblem, grid_points: int = 1000) -> OracleResult:
    """Exhaustive sum-rate search over the budget simplex, n <= 3.

    Position 0's signal is cancelled before any later decode, so topping the
    budget up through p_0 never hurts anyone: the search fixes
    p_0 = budget - sum(others) and grids the remaining positions.  Guarantees
    and decodability gaps are enforced on every grid point.  A feasible winner
    is then polished by re-gridding a one-step box around it a few times, so
    the reported optimum is not limited by the coarse step; the feasibility
    verdict itself stays a property of the full-budget grid.
    """
    cluster = problem.cluster
    order = cluster.decode_order
    n = len(order)
    if n > 3:
        raise DomainError("oracle supports clusters of at most 3 users")
    if grid_points < 2:
        raise DomainError("need at least 2 grid points per free dimension")
    width = problem.band_width_hz
    budget = problem.budget_mw
    g = np.array([problem.gains[u] for u in order])
    x = np.array([problem.external_interference.get(u, 0.0) for u in order])
    guarantees = np.array(
        [cluster.rate_guarantees.get(u, 0.0) for u in order]
    )

    def evaluate(p):
        feasible = np.ones(len(p), dtype=bool)
        for i in range(n - 1):
            gap = p[:, i] - p[:, i + 1:].sum(axis=1)
            g_min = g[i:].min()
            g_max = g[i:].max()
            worst = np.where(gap >= 0.0, gap * g_min, gap * g_max)
            feasible &= worst >= problem.p_tol
        rates = np.empty((len(p), n))
        for i in range(n):
            later = p[:, i + 1:].sum(axis=1)
            rates[:, i] = width * np.log2(
                1.0 + p[:, i] * g[i] / (g[i] * later + x[i] + 1.0)
            )
        for i in range(n):
            if guarantees[i] > 0.0:
                feasible &= rates[:, i] >= guarantees[i] * (1.0 - 1e-12)
        sums = rates.sum(axis=1)
        sums[~feasible] = -math.inf
        return feasible, sums

    def free_to_powers(free):
        # first column is the budget remainder, later columns the free dims
        return np.column_stack([budget - free.sum(axis=1), free])

    axis = np.linspace(0.0, budget, grid_points)
    if n == 1:
        free = np.zeros((1, 0))
    elif n == 2:
        free = axis.reshape(-1, 1)
    else:
        a, b = np.meshgrid(axis, axis, indexing="ij")
        a, b = a.ravel(), b.ravel()
        keep = a + b <= budget
        free = np.column_stack([a[keep], b[keep]])

    feasible, sums = evaluate(free_to_powers(free))
    if not feasible.any():
        return OracleResult(
            PowerAllocation(
                powers={u: 0.0 for u in order},
                feasible=False,
                diagnostics=("oracle_no_feasible_grid_point",),
            ),
            math.nan,
        )
    best_idx = int(np.argmax(sums))
    best_free = free[best_idx]
    best_sum = float(sums[best_idx])

    half = budget / (grid_points - 1)
    refine_pts = 51
    for _ in range(3 if n > 1 else 0):
        spans = [
            np.linspace(
                max(0.0, c - half), min(budget, c + half), refine_pts
            )
            for c in best_free
        ]
        if n == 2:
            cand = spans[0].reshape(-1, 1)
        else:
            a, b = np.meshgrid(spans[0], spans[1], indexing="ij")
            a, b = a.ravel(), b.ravel()
            keep = a + b <= budget
            cand = np.column_stack([a[keep], b[keep]])
        cand = np.vstack([cand, best_free.reshape(1, -1)])
        c_feasible, c_sums = evaluate(free_to_powers(cand))
        c_best = int(np.argmax(c_sums))
        if c_sums[c_best] > best_sum:
            best_sum = float(c_sums[c_best])
            best_free = cand[c_best]
        half = 2.0 * half / (refine_pts - 1)

    powers_vec = free_to_powers(best_free.reshape(1, -1))[0]
    powers = {order[i]: float(powers_vec[i]) for i in range(n)}
    return OracleResult(
        PowerAllocation(powers=powers, feasible=True),
        best_sum,
    )

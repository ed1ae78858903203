"""Two-cell evaluation scenarios: geometry builders, orthogonal-access
baselines, and the per-trial scheme dispatcher.

Three layouts are modeled, all with base stations 1 km apart:

1. one cell-edge user served jointly, two single-cell users per cell (one at a
   swept distance, one fixed at 300 m);
2. two cell-edge users served jointly, one single-cell user per cell at 250 m,
   with the edge-region radius swept;
3. like 2 but cell 2 has no single-cell user, so its cluster is the two edge
   users alone and the later-decoded edge user is cell 2's cluster head.

Single-cell users sit on the ray pointing away from the opposite base station
so their geometry is deterministic; edge users are drawn uniformly from a disc
at the midpoint, rejecting draws inside either cell's coverage radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .allocation import (
    EQUAL_RECEIVED,
    EQUAL_TRANSMIT,
    AllocationProblem,
    allocate_jt,
    allocate_single_cell,
)
from .channel import ChannelRealization, RadioParams, draw_realization
from .core import (
    COMP,
    NONCOMP,
    Band,
    Cell,
    NomaCluster,
    PowerAllocation,
    UserEquipment,
    comp_user_rate_jt,
    noncomp_user_rate,
)
from .errors import ConfigError, DomainError
from .schemes import (
    CS_NOMA,
    CS_OMA,
    DPS_NOMA,
    JT_NOMA,
    JT_OMA,
    CompSet,
    build_cs_band_plan,
    dps_select_cell,
    validate_jt_conditions,
)
from .units import dbm_to_mw

# Reference radio parameters: 43 dBm per cell, -139 dBm/Hz noise density,
# 8.64 MHz system band, fourth-power distance loss.  The decodability
# tolerance default is deliberately conservative; sweep presets relax it.
REFERENCE_RADIO = RadioParams(
    tx_power_mw=dbm_to_mw(43.0),
    noise_density_mw_hz=dbm_to_mw(-139.0),
    bandwidth_hz=8.64e6,
    pathloss_exponent=4.0,
    sic_tolerance=100.0,
)

DISC = "disc"
RING = "ring"

CASE_EDGE_ORDER_CELL2 = "case1"  # edge users decoded in cell-2 gain order
CASE_EDGE_ORDER_CELL1 = "case2"  # edge users decoded in cell-1 gain order

_GUARANTEE_SLACK = 1e-9
_MAX_PLACEMENT_DRAWS = 100_000


@dataclass(frozen=True)
class PlacementSpec:
    """Deterministic geometry knobs; None means 'use the scenario default'."""

    inter_site_m: float = 1000.0
    coverage_m: float = 400.0
    edge_region_radius_m: float | None = None
    edge_region_law: str = DISC
    primary_distance_m: float | None = None
    secondary_distance_m: float = 300.0

    def __post_init__(self) -> None:
        if self.inter_site_m <= 0.0 or self.coverage_m <= 0.0:
            raise DomainError("site spacing and coverage radius must be positive")
        if self.inter_site_m / 2.0 <= self.coverage_m:
            raise DomainError(
                "coverage discs overlap the midpoint; no admissible edge region"
            )
        if self.edge_region_law not in (DISC, RING):
            raise DomainError(f"unknown edge-region law {self.edge_region_law!r}")


@dataclass(frozen=True)
class ScenarioTopology:
    scenario_id: int
    radio: RadioParams
    cells: tuple[Cell, ...]
    users: tuple[UserEquipment, ...]
    comp_set: CompSet
    decode_case: str = CASE_EDGE_ORDER_CELL2
    sweep_value: float = 0.0

    def user(self, user_id: int) -> UserEquipment:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise KeyError(user_id)

    @property
    def comp_ids(self) -> tuple[int, ...]:
        return self.comp_set.comp_user_ids

    def noncomp_in_cell(self, cell_id: int) -> tuple[int, ...]:
        return tuple(
            u.user_id
            for u in self.users
            if u.role == NONCOMP and u.serving_cells[0] == cell_id
        )


def _draw_edge_position(
    rng, radius: float, law: str, cells: Sequence[Cell], coverage: float
) -> tuple[float, float]:
    """Uniform point in the midpoint disc (or on its rim), rejected while it
    falls inside either cell's coverage disc."""
    for _ in range(_MAX_PLACEMENT_DRAWS):
        theta = 2.0 * math.pi * rng.random()
        r = radius if law == RING else radius * math.sqrt(rng.random())
        x, y = r * math.cos(theta), r * math.sin(theta)
        if all(math.hypot(x - c.position[0], y - c.position[1]) > coverage for c in cells):
            return (x, y)
    raise DomainError(
        "edge-user placement rejected too often; region outside coverage is empty"
    )


def build_scenario(
    scenario_id: int,
    sweep_value: float,
    decode_case: str,
    rng,
    radio: RadioParams = REFERENCE_RADIO,
    placement: PlacementSpec | None = None,
) -> ScenarioTopology:
    """Instantiate one trial's topology at one sweep point.

    The sweep parameter is the swept single-cell user distance (scenario 1) or
    the edge-region radius (scenarios 2 and 3).  Consumes randomness only for
    edge-user positions, in ascending user-id order.
    """
    if scenario_id not in (1, 2, 3):
        raise ConfigError(f"unknown scenario {scenario_id}")
    if decode_case not in (CASE_EDGE_ORDER_CELL2, CASE_EDGE_ORDER_CELL1):
        raise ConfigError(f"unknown decode case {decode_case!r}")
    if sweep_value <= 0.0:
        raise DomainError("sweep value must be positive")
    spec = placement or PlacementSpec()

    half = spec.inter_site_m / 2.0
    cells = (
        Cell(cell_id=1, position=(-half, 0.0), power_budget_mw=radio.tx_power_mw),
        Cell(cell_id=2, position=(half, 0.0), power_budget_mw=radio.tx_power_mw),
    )

    if scenario_id == 1:
        edge_radius = spec.edge_region_radius_m if spec.edge_region_radius_m is not None else 200.0
        primary = sweep_value
        comp_ids = (1,)
    else:
        edge_radius = spec.edge_region_radius_m if spec.edge_region_radius_m is not None else sweep_value
        primary = spec.primary_distance_m if spec.primary_distance_m is not None else 250.0
        comp_ids = (1, 2)
    if primary > spec.coverage_m:
        raise DomainError(
            f"single-cell user distance {primary} exceeds coverage {spec.coverage_m}"
        )

    users: list[UserEquipment] = []
    for uid in comp_ids:
        pos = _draw_edge_position(rng, edge_radius, spec.edge_region_law, cells, spec.coverage_m)
        users.append(UserEquipment(uid, pos, COMP, (1, 2)))

    def away(cell: Cell, dist: float) -> tuple[float, float]:
        # on the ray from the opposite site through this one, dist beyond it
        sign = -1.0 if cell.position[0] < 0.0 else 1.0
        return (cell.position[0] + sign * dist, 0.0)

    if scenario_id == 1:
        for cell in cells:
            base = cell.cell_id * 10
            users.append(UserEquipment(base + 1, away(cell, primary), NONCOMP, (cell.cell_id,)))
            users.append(
                UserEquipment(base + 2, away(cell, spec.secondary_distance_m), NONCOMP, (cell.cell_id,))
            )
    elif scenario_id == 2:
        for cell in cells:
            users.append(UserEquipment(cell.cell_id * 10 + 1, away(cell, primary), NONCOMP, (cell.cell_id,)))
    else:
        users.append(UserEquipment(11, away(cells[0], primary), NONCOMP, (1,)))

    users.sort(key=lambda u: u.user_id)
    return ScenarioTopology(
        scenario_id=scenario_id,
        radio=radio,
        cells=cells,
        users=tuple(users),
        comp_set=CompSet(cell_ids=(1, 2), comp_user_ids=comp_ids),
        decode_case=decode_case,
        sweep_value=sweep_value,
    )


@dataclass(frozen=True)
class TrialResult:
    scheme: str
    rates_bps: Mapping[int, float]
    baseline_rates_bps: Mapping[int, float]
    spectral_efficiency: float
    baseline_spectral_efficiency: float
    feasible: bool
    guarantees_met: bool


def oma_rates(topology: ScenarioTopology, gains: ChannelRealization) -> dict[int, float]:
    """Orthogonal baseline: each cell splits its band evenly over its served
    set; jointly served users get the aligned share from both cells plus any
    leftover share from the cell serving fewer users.

    With power proportional to band share, in-band SNR equals full-band power
    times the full-band gain (p/B_share times gain*B_share/w cancels), so the
    budget-times-gain product is used directly.
    """
    p = topology.radio.tx_power_mw
    b = topology.radio.bandwidth_hz
    served: dict[int, list[int]] = {c.cell_id: [] for c in topology.cells}
    for u in topology.users:
        for c in u.serving_cells:
            served[c].append(u.user_id)
    width = {c: b / len(ids) for c, ids in served.items() if ids}

    rates: dict[int, float] = {}
    for u in topology.users:
        if u.role == NONCOMP:
            c = u.serving_cells[0]
            rates[u.user_id] = width[c] * math.log2(1.0 + p * gains[(c, u.user_id)])
        else:
            aligned = min(width[c] for c in u.serving_cells)
            snr_joint = sum(p * gains[(c, u.user_id)] for c in u.serving_cells)
            rate = aligned * math.log2(1.0 + snr_joint)
            for c in u.serving_cells:
                extra = width[c] - aligned
                if extra > 0.0:
                    rate += extra * math.log2(1.0 + p * gains[(c, u.user_id)])
            rates[u.user_id] = rate
    return rates


def _cs_pairing(topology: ScenarioTopology) -> list[tuple[int, int]]:
    """Edge user to cell pairing for orthogonal coordination: sorted zip."""
    return list(zip(sorted(topology.comp_set.cell_ids), sorted(topology.comp_ids)))


def cs_oma_rates(topology: ScenarioTopology, gains: ChannelRealization) -> dict[int, float]:
    """Fully orthogonal halves: each cell serves its edge user and its own
    single-cell user on separate half-bands at proportional power."""
    p = topology.radio.tx_power_mw
    half = topology.radio.bandwidth_hz / 2.0
    rates: dict[int, float] = {}
    for cell_id, edge in _cs_pairing(topology):
        inner = topology.noncomp_in_cell(cell_id)[0]
        for uid in (edge, inner):
            rates[uid] = half * math.log2(1.0 + p * gains[(cell_id, uid)])
    return rates


def _edge_decode_order(topology: ScenarioTopology, gains: ChannelRealization) -> tuple[int, ...]:
    """Shared decode order of the jointly served users: ascending realized
    gain in the reference cell (cell 2 in the first decode case of the
    asymmetric scenario, cell 1 otherwise)."""
    ref = 1
    if topology.scenario_id == 3 and topology.decode_case == CASE_EDGE_ORDER_CELL2:
        ref = 2
    return tuple(sorted(topology.comp_ids, key=lambda u: gains[(ref, u)]))


def _feasible(allocs: Sequence[PowerAllocation]) -> bool:
    return all(a.feasible for a in allocs)


def _jt_trial(
    topology: ScenarioTopology,
    gains: ChannelRealization,
    baseline: dict[int, float],
    interference_mode: str,
    jt_split: str,
) -> tuple[dict[int, float], bool]:
    radio = topology.radio
    band = Band(0, radio.bandwidth_hz)
    edge_order = _edge_decode_order(topology, gains)
    m = len(topology.comp_set.cell_ids)

    clusters: list[NomaCluster] = []
    problems: list[AllocationProblem] = []
    for cell in topology.cells:
        c = cell.cell_id
        tail = sorted(topology.noncomp_in_cell(c), key=lambda u: gains[(c, u)])
        order = edge_order + tuple(tail)
        guarantees = {u: baseline[u] for u in order[:-1]}
        cluster = NomaCluster(c, band, order, guarantees)
        clusters.append(cluster)

        eff: dict[int, float] = {}
        comp_cell: dict[int, dict[int, float]] = {}
        cross: dict[int, dict[int, float]] = {}
        for u in edge_order:
            per_cell = {cc: gains[(cc, u)] for cc in topology.comp_set.cell_ids}
            comp_cell[u] = per_cell
            if jt_split == EQUAL_RECEIVED:
                eff[u] = m * gains[(c, u)]
            else:
                eff[u] = sum(per_cell.values())
        for u in tail:
            eff[u] = gains[(c, u)]
            if interference_mode == "full":
                cross[u] = {
                    cc: gains[(cc, u)] for cc in topology.comp_set.cell_ids if cc != c
                }
        problems.append(
            AllocationProblem(
                cluster=cluster,
                gains=eff,
                budget_mw=cell.power_budget_mw,
                p_tol=radio.sic_tolerance,
                external_interference={},
                comp_cell_gains=comp_cell,
                cross_cell_gains=cross,
            )
        )

    validate_jt_conditions(clusters, topology.comp_ids)
    allocs = allocate_jt(problems, split=jt_split, interference_mode=interference_mode)
    if not _feasible(allocs):
        return dict(baseline), False

    rates: dict[int, float] = {}
    for u in topology.comp_ids:
        rates[u] = comp_user_rate_jt(clusters, allocs, gains, u)
    for i, cluster in enumerate(clusters):
        others = [
            (clusters[j], allocs[j]) for j in range(len(clusters)) if j != i
        ] if interference_mode == "full" else ()
        for u in cluster.decode_order:
            if u in rates:
                continue
            rates[u] = noncomp_user_rate(
                cluster, allocs[i], gains, u, interference_mode, others
            )
    return rates, True


def _dps_trial(
    topology: ScenarioTopology,
    gains: ChannelRealization,
    baseline: dict[int, float],
    interference_mode: str,
) -> tuple[dict[int, float], bool]:
    radio = topology.radio
    band = Band(0, radio.bandwidth_hz)
    members: dict[int, list[int]] = {c.cell_id: list(topology.noncomp_in_cell(c.cell_id)) for c in topology.cells}
    for u in topology.comp_ids:
        members[dps_select_cell(u, gains, topology.cells)].append(u)

    budgets = {c.cell_id: c.power_budget_mw for c in topology.cells}
    active = [c for c, ids in members.items() if ids]
    clusters: dict[int, NomaCluster] = {}
    allocs: dict[int, PowerAllocation] = {}
    for c in active:
        order = tuple(sorted(members[c], key=lambda u: gains[(c, u)]))
        guarantees = {u: baseline[u] for u in order[:-1]}
        cluster = NomaCluster(c, band, order, guarantees)
        external: dict[int, float] = {}
        if interference_mode == "full":
            for u in order:
                external[u] = sum(
                    budgets[o] * gains[(o, u)] for o in active if o != c
                )
        problem = AllocationProblem(
            cluster=cluster,
            gains={u: gains[(c, u)] for u in order},
            budget_mw=budgets[c],
            p_tol=radio.sic_tolerance,
            external_interference=external,
        )
        clusters[c] = cluster
        allocs[c] = allocate_single_cell(problem)

    if not _feasible(list(allocs.values())):
        return dict(baseline), False

    rates: dict[int, float] = {}
    for c in active:
        others = [
            (clusters[o], allocs[o]) for o in active if o != c
        ] if interference_mode == "full" else ()
        for u in clusters[c].decode_order:
            rates[u] = noncomp_user_rate(
                clusters[c], allocs[c], gains, u, interference_mode, others
            )
    return rates, True


def _cs_trial(
    topology: ScenarioTopology,
    gains: ChannelRealization,
    baseline: dict[int, float],
    interference_mode: str,
) -> tuple[dict[int, float], bool]:
    radio = topology.radio
    plan = build_cs_band_plan(
        topology.comp_set,
        {c.cell_id: topology.noncomp_in_cell(c.cell_id) for c in topology.cells},
    )
    bands = {a.band_id: Band(a.band_id, a.fraction * radio.bandwidth_hz) for a in plan.assignments}
    budgets = {c.cell_id: c.power_budget_mw for c in topology.cells}

    # band-effective gains: in-band noise shrinks with the band, so the
    # normalized gain scales by 1/fraction
    eff_table = {
        (c.cell_id, u.user_id): gains[(c.cell_id, u.user_id)] / 0.5
        for c in topology.cells
        for u in topology.users
    }
    eff = ChannelRealization(eff_table)

    built: list[tuple[NomaCluster, PowerAllocation, int]] = []
    for a in plan.assignments:
        order = tuple(sorted(a.members, key=lambda u: gains[(a.cell_id, u)]))
        guarantees = {u: baseline[u] for u in order[:-1]}
        cluster = NomaCluster(a.cell_id, bands[a.band_id], order, guarantees)
        external: dict[int, float] = {}
        if interference_mode == "full":
            for other in plan.assignments:
                if other.band_id != a.band_id or other.cell_id == a.cell_id:
                    continue
                for u in order:
                    external[u] = external.get(u, 0.0) + (
                        budgets[other.cell_id] * other.fraction * eff[(other.cell_id, u)]
                    )
        problem = AllocationProblem(
            cluster=cluster,
            gains={u: eff[(a.cell_id, u)] for u in order},
            budget_mw=budgets[a.cell_id] * a.fraction,
            p_tol=radio.sic_tolerance,
            external_interference=external,
        )
        built.append((cluster, allocate_single_cell(problem), a.band_id))

    if not _feasible([alloc for _, alloc, _ in built]):
        return dict(baseline), False

    rates: dict[int, float] = {u.user_id: 0.0 for u in topology.users}
    for cluster, alloc, band_id in built:
        others = [
            (oc, oa)
            for oc, oa, ob in built
            if ob == band_id and oc.cell_id != cluster.cell_id
        ] if interference_mode == "full" else ()
        for u in cluster.decode_order:
            rates[u] += noncomp_user_rate(cluster, alloc, eff, u, interference_mode, others)
    return rates, True


def _noma_non_heads(topology: ScenarioTopology, gains: ChannelRealization, scheme: str) -> set[int]:
    """Users holding a rate guarantee under the given scheme this trial."""
    if scheme == JT_NOMA:
        non_heads: set[int] = set()
        edge_order = _edge_decode_order(topology, gains)
        for cell in topology.cells:
            c = cell.cell_id
            tail = sorted(topology.noncomp_in_cell(c), key=lambda u: gains[(c, u)])
            order = edge_order + tuple(tail)
            non_heads.update(order[:-1])
        return non_heads
    if scheme == DPS_NOMA:
        members = {c.cell_id: list(topology.noncomp_in_cell(c.cell_id)) for c in topology.cells}
        for u in topology.comp_ids:
            members[dps_select_cell(u, gains, topology.cells)].append(u)
        non_heads = set()
        for c, ids in members.items():
            if ids:
                order = sorted(ids, key=lambda u: gains[(c, u)])
                non_heads.update(order[:-1])
        return non_heads
    if scheme == CS_NOMA:
        non_heads = set()
        for cell_id, edge in _cs_pairing(topology):
            inner = topology.noncomp_in_cell(cell_id)[0]
            order = sorted((edge, inner), key=lambda u: gains[(cell_id, u)])
            non_heads.update(order[:-1])
        return non_heads
    return set()


def run_trial(
    topology: ScenarioTopology,
    gains: ChannelRealization,
    scheme: str,
    interference_mode: str = "negligible",
    jt_split: str = EQUAL_TRANSMIT,
) -> TrialResult:
    """Evaluate one channel realization under one scheme.

    The orthogonal baseline is always computed: it supplies the non-head rate
    guarantees and the fallback rates when superposed access is infeasible.
    """
    if interference_mode not in ("full", "negligible"):
        raise DomainError(f"unknown interference mode {interference_mode!r}")
    baseline = oma_rates(topology, gains)
    b = topology.radio.bandwidth_hz

    if scheme == JT_OMA:
        rates, feasible = dict(baseline), True
    elif scheme == CS_OMA:
        _require_cs_shape(topology)
        rates, feasible = cs_oma_rates(topology, gains), True
    elif scheme == JT_NOMA:
        rates, feasible = _jt_trial(topology, gains, baseline, interference_mode, jt_split)
    elif scheme == DPS_NOMA:
        rates, feasible = _dps_trial(topology, gains, baseline, interference_mode)
    elif scheme == CS_NOMA:
        _require_cs_shape(topology)
        rates, feasible = _cs_trial(topology, gains, baseline, interference_mode)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")

    guarantees_met = True
    if feasible and scheme in (JT_NOMA, DPS_NOMA, CS_NOMA):
        for u in _noma_non_heads(topology, gains, scheme):
            if rates[u] < baseline[u] * (1.0 - _GUARANTEE_SLACK):
                guarantees_met = False
                break

    return TrialResult(
        scheme=scheme,
        rates_bps=rates,
        baseline_rates_bps=baseline,
        spectral_efficiency=math.fsum(rates.values()) / b,
        baseline_spectral_efficiency=math.fsum(baseline.values()) / b,
        feasible=feasible,
        guarantees_met=guarantees_met,
    )


def _require_cs_shape(topology: ScenarioTopology) -> None:
    if topology.scenario_id != 2:
        raise ConfigError(
            "orthogonal coordination needs two cells with one edge user and one "
            "single-cell user each"
        )

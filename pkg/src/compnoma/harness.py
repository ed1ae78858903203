"""Monte-Carlo sweep driver.

Every (sweep point, trial) pair owns a counter-derived RNG substream, so a
trial's channel realization depends only on the master seed and those two
indices.  All schemes of a run therefore see identical realizations, results
do not depend on the worker count or chunking, and per-point statistics are
reduced in trial order with exact summation.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from .channel import draw_realization
from .scenarios import build_scenario, run_trial
from .schemes import JT_NOMA

log = logging.getLogger("compnoma")

_MASK64 = (1 << 64) - 1
_Z95 = 1.96  # two-sided 95% normal quantile


def substream(master_seed: int, sweep_index: int, trial_index: int) -> random.Random:
    """Independent, reproducible RNG for one trial of one sweep point."""
    key = struct.pack(
        ">QQQ", master_seed & _MASK64, sweep_index & _MASK64, trial_index & _MASK64
    )
    digest = hashlib.blake2b(key, digest_size=16).digest()
    return random.Random(int.from_bytes(digest, "big"))


def sweep_values(start: float, stop: float, step: float) -> tuple[float, ...]:
    """Inclusive arithmetic grid; endpoints snapped against float drift."""
    if step <= 0.0:
        raise ValueError("sweep step must be positive")
    if stop < start:
        raise ValueError("sweep stop below start")
    count = int(math.floor((stop - start) / step + 0.5)) + 1
    return tuple(start + i * step for i in range(count))


def scheme_rows(config) -> tuple[tuple[str, str, str], ...]:
    """(csv label, scheme, decode case) per output series.

    Requesting both decode cases splits the jointly-transmitted series in two;
    other schemes do not depend on the shared decode order.
    """
    rows: list[tuple[str, str, str]] = []
    for scheme in config.schemes:
        if config.decode_case == "both":
            if scheme == JT_NOMA and config.scenario_id == 3:
                rows.append((f"{scheme}-case1", scheme, "case1"))
                rows.append((f"{scheme}-case2", scheme, "case2"))
            else:
                rows.append((scheme, scheme, "case1"))
        else:
            rows.append((scheme, scheme, config.decode_case))
    return tuple(rows)


def run_chunk(
    config, sweep_index: int, sweep_value: float, start: int, stop: int
) -> list[tuple[tuple[float, bool, bool], ...]]:
    """Evaluate trials [start, stop) at one sweep point under every series.

    Module-level so process pools can pickle it.  Returns, per trial, one
    (spectral efficiency, feasible, guarantees met) triple per series.
    """
    rows = scheme_rows(config)
    base_case = rows[0][2]
    out: list[tuple[tuple[float, bool, bool], ...]] = []
    for t in range(start, stop):
        rng = substream(config.seed, sweep_index, t)
        topology = build_scenario(
            config.scenario_id,
            sweep_value,
            base_case,
            rng,
            radio=config.radio,
            placement=config.placement,
        )
        gains = draw_realization(topology, rng)
        per_row = []
        for _, scheme, case in rows:
            topo = topology if case == topology.decode_case else replace(topology, decode_case=case)
            res = run_trial(
                topo, gains, scheme, config.interference_mode, config.jt_split
            )
            per_row.append((res.spectral_efficiency, res.feasible, res.guarantees_met))
        out.append(tuple(per_row))
    return out


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    scheme: str
    mean_se_bps_hz: float
    ci95: float
    infeasible_frac: float
    trials: int
    guarantee_violations: int = 0


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def series(self, scheme: str) -> tuple[SweepRow, ...]:
        return tuple(r for r in self.rows if r.scheme == scheme)

    @property
    def schemes(self) -> tuple[str, ...]:
        seen: list[str] = []
        for r in self.rows:
            if r.scheme not in seen:
                seen.append(r.scheme)
        return tuple(seen)


def _reduce_point(
    sweep_value: float,
    label: str,
    ses: Sequence[float],
    infeasible: int,
    violations: int,
) -> SweepRow:
    n = len(ses)
    mean = math.fsum(ses) / n
    if n > 1:
        var = math.fsum((x - mean) ** 2 for x in ses) / (n - 1)
        ci = _Z95 * math.sqrt(var / n)
    else:
        ci = 0.0
    return SweepRow(
        sweep_value=sweep_value,
        scheme=label,
        mean_se_bps_hz=mean,
        ci95=ci,
        infeasible_frac=infeasible / n,
        trials=n,
        guarantee_violations=violations,
    )


def run_sweep(config, workers: int = 1) -> SweepResult:
    """Run the configured sweep; identical output for any worker count."""
    values = sweep_values(config.sweep_start, config.sweep_stop, config.sweep_step)
    rows = scheme_rows(config)
    trials = config.trials
    out_rows: list[SweepRow] = []

    for s_i, value in enumerate(values):
        per_trial: list[tuple[tuple[float, bool, bool], ...] | None] = [None] * trials
        if workers <= 1:
            chunk = run_chunk(config, s_i, value, 0, trials)
            per_trial[:] = chunk
        else:
            span = max(1, -(-trials // (workers * 4)))
            ranges = [(t0, min(t0 + span, trials)) for t0 in range(0, trials, span)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(run_chunk, config, s_i, value, t0, t1): (t0, t1)
                    for t0, t1 in ranges
                }
                for fut, (t0, t1) in futures.items():
                    per_trial[t0:t1] = fut.result()
        for r_i, (label, _, _) in enumerate(rows):
            ses = [per_trial[t][r_i][0] for t in range(trials)]
            infeasible = sum(1 for t in range(trials) if not per_trial[t][r_i][1])
            violations = sum(1 for t in range(trials) if not per_trial[t][r_i][2])
            out_rows.append(_reduce_point(value, label, ses, infeasible, violations))
        log.info("sweep point %g done (%d trials, %d series)", value, trials, len(rows))

    return SweepResult(tuple(out_rows))

"""Acceptance battery behind `renyidecomp selftest`.

Each criterion returns a CriterionResult; records produced along the way are
collected (suite "accept<k>") so that a CSV of the battery can be compared
byte for byte across runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cli import KIND_CYCLE, SweepConfig, emit_report, run_sweep, summarize, SweepReport
from .entropies import renyi_divergence_stack
from .mutual import duality_gap_batch, mutual_info_batch
from .optimize import SimplexOptConfig, qubit_grid_oracle
from .orders import classify_triple, from_ratio, ratio
from .relations import (
    GRID_RESOLUTION,
    Batch,
    InequalityRecord,
    Term,
    _normform_diff,
    _orders4,
    _records,
    exclusion_batch,
    gbur_batch,
)
from .states import MeasurementPair, derive_seed, haar_vector, pure_state, random_state

TIME_LIMITS = {1: 60.0, 2: 600.0}
TOTAL_LIMIT = 900.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    records: list = field(default_factory=list)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} {flag} {self.title}: {self.detail} [{self.seconds:.1f}s]"


def _tag(records, k: int, start: int = 0):
    for i, r in enumerate(records):
        r.suite, r.trial = f"accept{k}", start + i
    return records


def _states(dims, n, seed, k):
    kinds = [x for x in KIND_CYCLE if dims[0] == dims[1] or x != "max_entangled"]
    seeds = [derive_seed(seed, 100 + k, dims[0], dims[1], i) for i in range(n)]
    return [random_state(kinds[i % len(kinds)], dims, s) for i, s in enumerate(seeds)], seeds


def _worst(records):
    return min((r.margin for r in records), default=math.inf)


# 1 ---------------------------------------------------------------------------------------


def criterion1(seed=0, workers=1):
    recs = []
    for dims in ((2, 2), (2, 3), (3, 3)):
        rhos, seeds = _states(dims, 200, seed, 1)
        b = Batch(rhos, seeds)
        mi1 = b.mi_up(1.0, fixed=0)
        h_a, h_b, h_ab = b.entropy(1.0, 0), b.entropy(1.0, 1), b.entropy(1.0)
        cond = h_ab.value - h_b.value
        recs += _records(b, "order1-cond", "ge", [(1.0, Term(-np.abs(mi1.value - (h_a.value - cond)), 1,
                                                               mi1.converged))], [], _orders4(1, 1, 1))
        recs += _records(b, "order1-joint", "ge", [(1.0, Term(-np.abs(mi1.value - (h_a.value + h_b.value
                                                                                    - h_ab.value)), 1,
                                                                mi1.converged))], [], _orders4(1, 1, 1))
    ok = _worst(recs) >= -1e-6 and all(r.converged for r in recs)
    return ok, f"{len(recs)} comparisons, max deviation {-_worst(recs):.2e} bits", recs


# 2 ---------------------------------------------------------------------------------------


def criterion2(seed=0, workers=1):
    cfg = SweepConfig(suite="thm1", dims=((2, 2), (2, 3), (3, 3)), trials=8000, seed=seed, order_samples=20,
                      workers=workers)
    rep = run_sweep(cfg)
    s = rep.summary["thm1"]
    cases = {r.orders[:3] for r in rep.records}
    ok = s["failed"] == 0 and s["not_converged"] == 0 and len(cases) == 80
    detail = (f"{len(cases)} triples x 100 states, {s['records']} records, {s['failed']} fails, "
              f"min margin {s['min_margin_bits']} bits")
    return ok, detail, rep.records


# 3 ---------------------------------------------------------------------------------------


def criterion3(seed=0, workers=1):
    rhos, seeds = _states((2, 2), 50, seed, 3)
    b = Batch(rhos, seeds)
    recs = []
    for a in (0.6, 0.75, 2.0, 3.0):
        for which, name in (("entropy_RE", "normform-re"), ("cond_CRE", "normform-cre"),
                            ("mutual_MI", "normform-mi")):
            recs += _records(b, name, "ge", [(1.0, _normform_diff(b, a, which))], [], _orders4(a))
    ok = _worst(recs) >= -1e-5 and all(r.converged for r in recs)
    return ok, f"{len(recs)} comparisons, max deviation {-_worst(recs):.2e} bits", recs


# 4 ---------------------------------------------------------------------------------------


def criterion4(seed=0, workers=1):
    seeds = [derive_seed(seed, 104, i) for i in range(50)]
    pure = [pure_state(haar_vector(16, s), (2, 2, 4)) for s in seeds]
    b = Batch([p.marginal(0, 1) for p in pure], seeds)
    recs = []
    for a in (0.55, 1.0, 2.0):
        gaps, conv = duality_gap_batch(pure, [p.marginal(0) for p in pure], a, seed=seeds)
        recs += _records(b, "duality", "ge", [(1.0, Term(-np.abs(gaps), 1, conv))], [], _orders4(a))
    ok = _worst(recs) >= -1e-4 and all(r.converged for r in recs)
    return ok, f"{len(recs)} gaps, max |gap| {-_worst(recs):.2e} bits", recs


# 5 ---------------------------------------------------------------------------------------


def range_oracle(a, b, g):
    """Case label from the sign pattern of (a-1, b-1, g-1) and the case ranges, b >= g."""
    b, g = max(b, g), min(b, g)
    up = tuple(x > 1 for x in (a, b, g))
    if up == (True, True, True):
        return "Case1" if a < 2 else "Invalid"
    if up == (False, False, False):
        return "Case2" if a >= 2 / 3 and g >= 0.5 else "Invalid"
    if up == (True, True, False):
        return "Case3" if b < 2 and g >= 0.5 else "Invalid"
    if up == (False, True, False):
        return "Case4" if g >= 0.5 else "Invalid"
    return "Invalid"


def _random_order(rng):
    u = rng.random()
    if u < 0.02:
        return math.inf
    if u < 0.6:
        return float(rng.uniform(0.3, 2.5))
    return float(np.exp(rng.uniform(np.log(0.3), np.log(60.0))))


def criterion5(seed=0, workers=1, n=100_000):
    rng = np.random.default_rng(derive_seed(seed, 105))
    mismatches = sign_fails = related = 0
    for _ in range(n):
        a, b = _random_order(rng), _random_order(rng)
        if rng.random() < 0.1 or a == 1.0 or b == 1.0:
            g = _random_order(rng)
        else:
            r = ratio(a) - ratio(b)
            if r == 0.0 or (0.0 < r < 1.0):
                g = _random_order(rng)
            else:
                g = from_ratio(r)
        if g == 1.0:
            continue
        t = classify_triple(a, b, g)
        rel = t.residual <= 1e-9
        related += rel
        want = range_oracle(a, b, g) if rel else "Invalid"
        mismatches += t.case != want
        hi, lo = max(b, g), min(b, g)
        prod = np.prod([1.0 if math.isinf(x) else x - 1.0 for x in (a, b, g)])
        if rel and hi > lo:
            if a < lo < hi and not (prod > 0 and t.sign == "positive"):
                sign_fails += 1
            if lo < hi < a and not (prod < 0 and t.sign == "negative"):
                sign_fails += 1
    ok = mismatches == 0 and sign_fails == 0
    return ok, f"{n} triples ({related} related), {mismatches} case mismatches, {sign_fails} sign violations", []


# 6 ---------------------------------------------------------------------------------------


def _exclusion_pairs(seed):
    pairs = [MeasurementPair.mub(2), MeasurementPair.mub(3)]
    pairs += [MeasurementPair.haar(2 + k % 2, derive_seed(seed, 106, k)) for k in range(20)]
    return pairs


def criterion6(seed=0, workers=1, states_per_pair=100):
    from .cli import gbur_pool, exclusion_pool
    gb_orders = gbur_pool(SweepConfig(suite="gbur", seed=seed, order_samples=10))
    ex_orders = exclusion_pool(SweepConfig(suite="exclusion", seed=seed, order_samples=10))
    recs = []
    for pi, pair in enumerate(_exclusion_pairs(seed)):
        rhos, seeds = _states((pair.d, 2), states_per_pair, seed, 600 + pi)
        for k in range(10):
            # state i of this pair meets order sample i mod 10
            sub = Batch(rhos[k::10], seeds[k::10])
            recs += gbur_batch(sub, pair, *gb_orders[k])
            thm2, single = ex_orders[k]
            recs += exclusion_batch(sub, pair, thm2, "thm2")
            recs += exclusion_batch(sub, pair, (single,), "res2c")
    mub2 = MeasurementPair.mub(2)
    rhos, seeds = _states((2, 2), states_per_pair, seed, 699)
    hall = exclusion_batch(Batch(rhos, seeds), mub2, None, "hall_limit")
    recs += hall
    hall_exact = all(r.rhs == 1.0 for r in hall)
    has_fixed = any(tuple(o) == (2.0, 0.5, 1.25) for o, _ in ex_orders) and ex_orders[0][1] == 0.5
    names = {r.name for r in recs}
    ok = _worst(recs) >= -1e-6 and hall_exact and has_fixed and all(r.converged for r in recs)
    detail = (f"{len(recs)} records over 22 pairs ({', '.join(sorted(names))}), min margin {_worst(recs):.3g} bits, "
              f"hall bound {hall[0].rhs!r} bits")
    return ok, detail, recs


# 7 ---------------------------------------------------------------------------------------


def criterion7(seed=0, workers=1):
    cfg = SweepConfig(suite="sanity", dims=((2, 2), (2, 3)), trials=500, seed=seed, workers=workers)
    rep = run_sweep(cfg)
    bad = [r for r in rep.records if r.margin < (-1e-8 if r.name.startswith("dpi") else -1e-6)]
    ok = not bad and all(r.converged for r in rep.records)
    names = sorted({r.name for r in rep.records})
    return ok, f"500 states, {len(rep.records)} records over {len(names)} properties, {len(bad)} fails", rep.records


# 8 ---------------------------------------------------------------------------------------


GRID_ORDERS = (0.6, 0.8, 1.5, 2.0, 3.0)


def criterion8(seed=0, workers=1):
    rhos, seeds = _states((2, 2), 50, seed, 8)
    recs, spreads, below = [], [], 0
    for k, a in enumerate(GRID_ORDERS):
        idx = list(range(k, 50, len(GRID_ORDERS)))
        sub = [rhos[i] for i in idx]
        sd = [seeds[i] for i in idx]
        cfg = SimplexOptConfig(restarts=4) if a >= 1 else None
        res = mutual_info_batch(sub, a, "up", marginal=0, cfg=cfg, seed=sd)
        grid = []
        for r in sub:
            F = r.marginal(0).matrix
            grid.append(qubit_grid_oracle(None, GRID_RESOLUTION, "minimize",
                                          batch=lambda S, r=r, F=F: renyi_divergence_stack(
                                              r, np.einsum("ij,nkl->nikjl", F, S).reshape(-1, 4, 4), a)).value)
        signed = np.array([x.value for x in res]) - np.array(grid)
        below += int(np.sum(signed <= 1e-9))
        diff = np.abs(signed)
        b = Batch(sub, sd)
        recs += _records(b, "grid-agreement", "ge",
                         [(1.0, Term(-diff, 1, np.array([x.converged for x in res])))], [], _orders4(a))
        if a >= 1:
            spreads += [max(x.restart_values) - min(x.restart_values) for x in res]
    spread = max(spreads)
    ok = _worst(recs) >= -1e-3 and spread <= 1e-6 and all(r.converged for r in recs)
    return ok, (f"50 objectives, max |optimizer - grid| {-_worst(recs):.2e} bits, optimizer at or below the grid "
                f"in {below}/50, restart spread {spread:.1e}"), recs


# 9 ---------------------------------------------------------------------------------------


def criterion9(seed=0, workers=1, first=None, start=None):
    """Re-run the cheap criteria and the sanity sweep; compare CSV bytes."""
    reruns = (1, 3, 4)
    same = True
    for k in reruns:
        again = _tag(CRITERIA[k][1](seed, workers)[2], k)
        if first and k in first:
            same &= _csv(first[k]) == _csv(again)
    cfg = SweepConfig(suite="sanity", dims=((2, 2),), trials=10, seed=7)
    same &= emit_report(run_sweep(cfg), "csv") == emit_report(run_sweep(cfg), "csv")
    elapsed = 0.0 if start is None else time.perf_counter() - start
    ok = same and elapsed <= TOTAL_LIMIT
    return ok, f"reruns byte-identical: {same}, battery wall time {elapsed:.0f}s", []


def _csv(records) -> str:
    return emit_report(SweepReport(records, {}), "csv")


CRITERIA = {
    1: ("order-1 equality recovery", criterion1),
    2: ("decomposition inequalities", criterion2),
    3: ("norm-form equivalence", criterion3),
    4: ("duality", criterion4),
    5: ("order classification", criterion5),
    6: ("uncertainty and exclusion relations", criterion6),
    7: ("sanity battery", criterion7),
    8: ("optimizer vs grid oracle", criterion8),
    9: ("determinism and wall time", None),
}


def run_battery(seed=0, workers=1, only=None, report=None):
    """Run the criteria in order; returns (results, records).

    `report`, if given, is called with each CriterionResult as it finishes.
    """
    wanted = sorted(only) if only else sorted(CRITERIA)
    results, records, by_k = [], [], {}
    start = time.perf_counter()
    for k in wanted:
        title, fn = CRITERIA[k]
        t0 = time.perf_counter()
        if k == 9:
            ok, detail, recs = criterion9(seed, workers, by_k, start)
        else:
            ok, detail, recs = fn(seed, workers)
        dt = time.perf_counter() - t0
        if k in TIME_LIMITS and dt > TIME_LIMITS[k]:
            ok, detail = False, detail + f", over the {TIME_LIMITS[k]:.0f}s limit"
        recs = _tag(recs, k)
        by_k[k] = recs
        records += recs
        res = CriterionResult(k, title, bool(ok), detail, dt, recs)
        results.append(res)
        if report:
            report(res)
    return results, records


__all__ = ["CriterionResult", "CRITERIA", "run_battery", "range_oracle"]

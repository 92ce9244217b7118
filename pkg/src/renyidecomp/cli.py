"""Sweep harness: configuration, randomized verification runs and reports.

Trial t of a sweep is fully determined by (config, suite, t): its state
seed is derive_seed(seed, suite code, t), and its shape, ensemble, order
set and measurement pair cycle with t. Trials sharing shape, orders and
pair are evaluated together as one batch.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import __version__
from .linalg import ValidationError
from .orders import CASES, classify_triple, cor4_partner, make_quad, sample_triple, solve_delta, theorem2_feasible
from .relations import (
    Batch,
    InequalityRecord,
    chain_batch,
    corollary1_batch,
    exclusion_batch,
    gbur_batch,
    gbur_relation_residual,
    sanity_batch,
    sanity_partner,
    SANITY_PROFILES,
    theorem1_trial_batch,
)
from .states import MeasurementPair, derive_seed, haar_vector, pure_state, random_state

SUITES = ("thm1", "cor1", "chain", "gbur", "exclusion", "sanity")
SUITE_CODES = {name: i + 1 for i, name in enumerate(SUITES)}
FORMATS = ("csv", "json")
KIND_CYCLE = ("hs_mixed", "haar_pure", "product", "classical_quantum", "hs_mixed")
HAAR_PAIRS = 2

FIELDS = ("suite", "name", "alpha", "beta", "gamma", "delta", "dimA", "dimB", "seed", "trial",
          "lhs_bits", "rhs_bits", "margin_bits", "soundness", "converged")


@dataclass
class SweepConfig:
    suite: str = "sanity"
    dims: tuple = ((2, 2),)
    trials: int = 10
    seed: int = 0
    order_samples: int = 1
    orders: tuple | None = None
    tolerance_bits: float = 1e-6
    output_path: str | None = None
    output_format: str = "csv"
    workers: int = 1

    def validate(self) -> "SweepConfig":
        if self.suite not in SUITES + ("all",):
            raise ValidationError(f"suite: expected one of {SUITES + ('all',)}, got {self.suite!r}")
        if not self.dims or any(len(d) != 2 or min(d) < 2 for d in self.dims):
            raise ValidationError(f"dims: need shapes like 2x3 with both sides >= 2, got {self.dims!r}")
        if self.trials < 1:
            raise ValidationError(f"trials: must be at least 1, got {self.trials}")
        if self.order_samples < 1:
            raise ValidationError(f"order_samples: must be at least 1, got {self.order_samples}")
        if not self.tolerance_bits >= 0:
            raise ValidationError(f"tolerance_bits: must be nonnegative, got {self.tolerance_bits}")
        if self.output_format not in FORMATS:
            raise ValidationError(f"output_format: expected csv or json, got {self.output_format!r}")
        if self.workers < 1:
            raise ValidationError(f"workers: must be at least 1, got {self.workers}")
        if self.orders is not None and self.suite in ("sanity", "all"):
            raise ValidationError(f"orders: explicit orders do not apply to suite {self.suite!r}")
        return self


@dataclass
class SweepReport:
    records: list
    summary: dict
    provenance: dict = field(default_factory=dict)


# -- parsing ---------------------------------------------------------------------------


def parse_order(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    return float(Fraction(t))


def parse_dims(text: str) -> tuple:
    out = []
    for part in text.split(","):
        try:
            a, b = part.lower().split("x")
            out.append((int(a), int(b)))
        except ValueError:
            raise ValidationError(f"dims: cannot read {part!r}; use e.g. 2x2,2x3") from None
    return tuple(out)


def parse_orders(text: str) -> tuple:
    """'4/3,2,2; 2/3,1/2,1/2' -> ((1.33.., 2.0, 2.0), (0.66.., 0.5, 0.5))."""
    try:
        return tuple(tuple(parse_order(x) for x in grp.split(",")) for grp in text.split(";") if grp.strip())
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"orders: cannot read {text!r}") from None


_PARSERS = {
    "suite": str, "dims": parse_dims, "trials": int, "seed": int, "order_samples": int,
    "orders": parse_orders, "tolerance_bits": float, "output_path": str, "output_format": str, "workers": int,
}


def load_config_file(path: str) -> dict:
    """key = value lines (the SweepConfig field names); '#' starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[sweep]\n" + fh.read())
    out = {}
    for key, value in parser["sweep"].items():
        if key not in _PARSERS:
            raise ValidationError(f"{key}: unknown configuration field")
        try:
            out[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ValidationError(f"{key}: {exc}") from None
    return out


# -- order pools -----------------------------------------------------------------------


def _oriented(t, flip: bool):
    return classify_triple(t.alpha, t.gamma, t.beta) if flip else t


def thm1_pool(cfg: SweepConfig) -> list:
    if cfg.orders:
        return [_checked_triple(o) for o in cfg.orders]
    rng = np.random.default_rng(derive_seed(cfg.seed, SUITE_CODES["thm1"], 10**6))
    # cases interleave so every block of four trials covers all of them
    return [_oriented(sample_triple(c, rng), j % 2 == 1) for j in range(cfg.order_samples) for c in CASES]


def _checked_triple(o):
    if len(o) != 3:
        raise ValidationError(f"orders: expected triples, got {o!r}")
    t = classify_triple(*o)
    if not t.valid:
        raise ValidationError(f"orders: {o!r} is not a valid related triple")
    return t


def cor1_pool(cfg: SweepConfig) -> list:
    if cfg.orders:
        out = []
        for o in cfg.orders:
            if len(o) != 4:
                raise ValidationError(f"orders: cor1 sweeps take quads, got {o!r}")
            q = make_quad(*o)
            direction = "lower" if q.delta < min(o[:3]) else "upper"
            out.append((q, direction))
        return out
    rng = np.random.default_rng(derive_seed(cfg.seed, SUITE_CODES["cor1"], 10**6))
    out = []
    for _ in range(cfg.order_samples):
        for direction in ("lower", "upper"):
            out.append((_sample_quad(rng, direction), direction))
    return out


def _sample_quad(rng, direction):
    while True:
        a, b, g = (float(x) for x in rng.uniform(0.55, 4.0, 3))
        if direction == "upper" and rng.random() < 0.7:
            a, b, g = (float(x) for x in rng.uniform(0.55, 0.97, 3))
        if min(abs(x - 1) for x in (a, b, g)) < 0.03:
            continue
        d = solve_delta(a, b, g)
        if d is None or not d > 0.5 or abs(d - 1) < 1e-6:
            continue
        if (direction == "lower" and d < min(a, b, g)) or (direction == "upper" and d > max(a, b, g)):
            return make_quad(a, b, g, d)


def chain_pool(cfg: SweepConfig) -> list:
    if cfg.orders:
        ts = [_checked_triple(o) for o in cfg.orders]
        pos = [t for t in ts if t.sign in ("positive", "zero")]
        neg = [t for t in ts if t.sign in ("negative", "zero")]
        if not pos or not neg:
            raise ValidationError("orders: chain sweeps need at least one triple of each sign")
        n = max(len(pos), len(neg))
        return [(pos[i % len(pos)], neg[i % len(neg)]) for i in range(n)]
    rng = np.random.default_rng(derive_seed(cfg.seed, SUITE_CODES["chain"], 10**6))
    out = []
    for j in range(cfg.order_samples):
        flip = j % 2 == 1
        pos = _oriented(sample_triple(("Case1", "Case4")[j % 2], rng), flip)
        neg = _oriented(sample_triple(("Case2", "Case3")[j % 2], rng), flip)
        out.append((pos, neg))
    return out


def gbur_pool(cfg: SweepConfig) -> list:
    if cfg.orders:
        for o in cfg.orders:
            if len(o) != 3 or gbur_relation_residual(*o) > 1e-9:
                raise ValidationError(f"orders: {o!r} does not satisfy the uncertainty-relation orders")
        return [tuple(o) for o in cfg.orders]
    rng = np.random.default_rng(derive_seed(cfg.seed, SUITE_CODES["gbur"], 10**6))
    out = []
    for j in range(cfg.order_samples):
        t = sample_triple(("Case2", "Case3")[j % 2], rng)
        out.append(_oriented(t, j % 4 >= 2).as_tuple())
    return out


def exclusion_pool(cfg: SweepConfig) -> list:
    if cfg.orders:
        for o in cfg.orders:
            if len(o) != 3 or not theorem2_feasible(*o):
                raise ValidationError(f"orders: {o!r} is not feasible for the exclusion relation")
        thm2 = [tuple(o) for o in cfg.orders]
    else:
        thm2 = [(2.0, 0.5, 1.25)]
        rng = np.random.default_rng(derive_seed(cfg.seed, SUITE_CODES["exclusion"], 10**6))
        while len(thm2) < cfg.order_samples:
            thm2.append(sample_exclusion_orders(rng))
    single = [0.5] + [float(x) for x in
                      np.random.default_rng(derive_seed(cfg.seed, SUITE_CODES["exclusion"], 10**6 + 1))
                      .uniform(0.55, 4 / 3, max(len(thm2) - 1, 0))]
    return list(zip(thm2, single))


def sample_exclusion_orders(rng) -> tuple:
    while True:
        b, g = (float(x) for x in rng.uniform(0.5, 4 / 3, 2))
        a = float(np.exp(rng.uniform(np.log(0.7), np.log(20.0))))
        if min(abs(x - 1) for x in (a, b, g)) < 0.02:
            continue
        if theorem2_feasible(a, b, g):
            return (a, b, g)


POOLS = {"thm1": thm1_pool, "cor1": cor1_pool, "chain": chain_pool, "gbur": gbur_pool,
         "exclusion": exclusion_pool, "sanity": lambda cfg: list(range(SANITY_PROFILES))}


def measurement_pairs(d: int, seed: int) -> list:
    return [MeasurementPair.mub(d)] + [MeasurementPair.haar(d, derive_seed(seed, 99, d, k))
                                       for k in range(HAAR_PAIRS)]


# -- evaluation ------------------------------------------------------------------------


def trial_state(suite: str, cfg: SweepConfig, t: int):
    dims = cfg.dims[t % len(cfg.dims)]
    kind = KIND_CYCLE[t % len(KIND_CYCLE)]
    seed = derive_seed(cfg.seed, SUITE_CODES[suite], t)
    return random_state(kind, dims, seed), seed


def evaluate_group(suite: str, item, pair, states, seeds, tight: bool = False) -> list:
    """Records for one batch of trials; returns one list of records per state."""
    batch = Batch(states, seeds, tight)
    if suite == "thm1":
        recs = theorem1_trial_batch(batch, item)
        per = 4
    elif suite == "cor1":
        quad, direction = item
        recs, per = corollary1_batch(batch, quad, direction), 1
    elif suite == "chain":
        pos, neg = item
        dA, dB = batch.dims
        tri = [pure_state(haar_vector(dA * dB * 2, seed=derive_seed(s, 1)), (dA, dB, 2)) for s in seeds]
        sig = [random_state("hs_mixed", (2,), derive_seed(s, 2)) for s in seeds]
        groups = [chain_batch(batch, pos, "cr1"), chain_batch(batch, neg, "cr2"),
                  chain_batch(Batch(tri, seeds, tight), neg, "generalized", sig)]
        recs, per = [r for g in zip(*groups) for r in g], 3
    elif suite == "gbur":
        recs, per = gbur_batch(batch, pair, *item), 1
    elif suite == "exclusion":
        thm2, single = item
        groups = [exclusion_batch(batch, pair, thm2, "thm2"), exclusion_batch(batch, pair, (single,), "res2c"),
                  exclusion_batch(batch, pair, None, "hall_limit")]
        recs, per = [r for g in zip(*groups) for r in g], 3
    elif suite == "sanity":
        partners = [sanity_partner(r, derive_seed(s, 3)) for r, s in zip(batch.rhos, seeds)]
        recs = sanity_batch(batch, item, partners)
        per = len(recs) // len(states)
    else:
        raise ValidationError(f"unknown suite {suite!r}")
    return [recs[i * per:(i + 1) * per] for i in range(len(states))]


def _run_group(args):
    suite, cfg, key, trials = args
    pool = POOLS[suite](cfg)
    d_idx, p_idx, q_idx = key
    item = pool[p_idx]
    dims = cfg.dims[d_idx]
    pair = measurement_pairs(dims[0], cfg.seed)[q_idx] if suite in ("gbur", "exclusion") else None
    states, seeds = zip(*(trial_state(suite, cfg, t) for t in trials))
    per_state = evaluate_group(suite, item, pair, list(states), list(seeds))
    # violation protocol: re-evaluate failing trials with tightened settings
    bad = [i for i, recs in enumerate(per_state) if any(not r.passed(cfg.tolerance_bits) for r in recs)]
    if bad:
        fresh = evaluate_group(suite, item, pair, [states[i] for i in bad], [seeds[i] for i in bad], tight=True)
        for i, new in zip(bad, fresh):
            merged = []
            for old, nr in zip(per_state[i], new):
                if old.passed(cfg.tolerance_bits):
                    merged.append(old)
                else:
                    best = nr if nr.margin > old.margin else old
                    merged.append(replace(best, rechecked=True))
            per_state[i] = merged
    out = []
    for t, recs in zip(trials, per_state):
        for r in recs:
            r.suite, r.trial = suite, int(t)
        out.append((t, recs))
    return out


def _groups(suite: str, cfg: SweepConfig) -> dict:
    P = len(POOLS[suite](cfg))
    groups: dict = {}
    for t in range(cfg.trials):
        d_idx = t % len(cfg.dims)
        q_idx = t % (HAAR_PAIRS + 1) if suite in ("gbur", "exclusion") else 0
        groups.setdefault((d_idx, t % P, q_idx), []).append(t)
    return groups


def run_sweep(cfg: SweepConfig) -> SweepReport:
    cfg.validate()
    start = time.perf_counter()
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)
    records: list = []
    for suite in suites:
        tasks = [(suite, cfg, key, trials) for key, trials in _groups(suite, cfg).items()]
        if cfg.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
                results = list(ex.map(_run_group, tasks))
        else:
            results = [_run_group(t) for t in tasks]
        done = sorted((pair for res in results for pair in res), key=lambda p: p[0])
        records.extend(r for _, recs in done for r in recs)
    wall = time.perf_counter() - start
    return SweepReport(records, summarize(records, cfg.tolerance_bits),
                       {"config": _config_echo(cfg), "version": __version__, "wall_time_s": wall})


def _config_echo(cfg: SweepConfig) -> dict:
    d = asdict(cfg)
    d["dims"] = ["%dx%d" % tuple(x) for x in cfg.dims]
    d["orders"] = None if cfg.orders is None else [[_num(x) for x in o] for o in cfg.orders]
    return d


def summarize(records, tol: float) -> dict:
    out = {}
    for suite in dict.fromkeys(r.suite for r in records):
        rs = [r for r in records if r.suite == suite]
        margins = np.array([r.margin for r in rs])
        fails = [r for r in rs if not r.passed(tol)]
        out[suite] = {
            "records": len(rs),
            "passed": len(rs) - len(fails),
            "failed": len(fails),
            "min_margin_bits": _num(float(np.min(margins))),
            "mean_margin_bits": _num(float(np.mean(margins))),
            "not_converged": sum(not r.converged for r in rs),
            "certified": sum(r.soundness == "certified" for r in rs),
            "counterexample_candidates": [f"{r.name}@trial{r.trial}" for r in fails],
        }
    return out


def candidates(report: SweepReport) -> list:
    return [c for s in report.summary.values() for c in s["counterexample_candidates"]]


# -- serialization -----------------------------------------------------------------------


def _num(x):
    """12 significant digits; non-finite values become strings so JSON stays standard."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(f"{x:.12g}")


def record_row(r: InequalityRecord) -> dict:
    a, b, g, d = r.orders
    return {"suite": r.suite, "name": r.name, "alpha": _num(a), "beta": _num(b), "gamma": _num(g),
            "delta": _num(d), "dimA": int(r.dims[0]), "dimB": int(r.dims[1]), "seed": int(r.seed),
            "trial": int(r.trial), "lhs_bits": _num(r.lhs), "rhs_bits": _num(r.rhs),
            "margin_bits": _num(r.margin), "soundness": r.soundness, "converged": bool(r.converged)}


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def emit_report(report: SweepReport, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for r in report.records:
            row = record_row(r)
            w.writerow([_csv_cell(row[k]) for k in FIELDS])
        return buf.getvalue()
    if fmt == "json":
        doc = {"records": [record_row(r) for r in report.records], "summary": report.summary,
               "provenance": report.provenance}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    raise ValidationError(f"format must be csv or json, got {fmt!r}")


def _float(v) -> float:
    return float(v)


def _row_record(row: dict) -> InequalityRecord:
    conv = row["converged"]
    if isinstance(conv, str):
        conv = conv == "true"
    return InequalityRecord(
        name=row["name"], lhs=_float(row["lhs_bits"]), rhs=_float(row["rhs_bits"]),
        margin=_float(row["margin_bits"]),
        orders=tuple(_float(row[k]) for k in ("alpha", "beta", "gamma", "delta")),
        seed=int(row["seed"]), soundness=row["soundness"], converged=bool(conv),
        dims=(int(row["dimA"]), int(row["dimB"])), trial=int(row["trial"]), suite=row["suite"])


def parse_report(text: str, fmt: str = "csv") -> list:
    """Records from an emitted CSV or JSON document."""
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != FIELDS:
            raise ValidationError("CSV header does not match the report schema")
        return [_row_record(row) for row in reader]
    if fmt == "json":
        return [_row_record(row) for row in json.loads(text)["records"]]
    raise ValidationError(f"format must be csv or json, got {fmt!r}")


def write_report(report: SweepReport, path: str | None, fmt: str) -> None:
    text = emit_report(report, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"output_path: cannot write {path!r}: {exc}") from None


# -- command line ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="renyidecomp", description="Randomized checks of Renyi entropy inequalities.")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification sweep")
    v.add_argument("suite", nargs="?", choices=SUITES + ("all",))
    v.add_argument("--config", help="key = value file with SweepConfig fields; flags override it")
    v.add_argument("--suite", dest="suite_flag", choices=SUITES + ("all",))
    v.add_argument("--dims", type=parse_dims)
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int)
    g = v.add_mutually_exclusive_group()
    g.add_argument("--orders", type=parse_orders, help="explicit orders, e.g. '4/3,2,2;2/3,1/2,1/2'")
    g.add_argument("--order-samples", dest="order_samples", type=int)
    v.add_argument("--tol-bits", dest="tolerance_bits", type=float)
    v.add_argument("--out", dest="output_path")
    v.add_argument("--format", dest="output_format", choices=FORMATS)
    v.add_argument("--workers", type=int)

    r = sub.add_parser("report", help="summarize a CSV or JSON report")
    r.add_argument("path")
    r.add_argument("--format", dest="output_format", choices=FORMATS)
    r.add_argument("--tol-bits", dest="tolerance_bits", type=float, default=1e-6)

    s = sub.add_parser("selftest", help="run the acceptance battery")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", dest="output_path")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--only", type=lambda x: [int(y) for y in x.split(",")], help="criterion numbers, e.g. 1,3")
    return ap


def config_from_args(args) -> SweepConfig:
    values = load_config_file(args.config) if args.config else {}
    for key in ("dims", "trials", "seed", "orders", "order_samples", "tolerance_bits", "output_path",
                "output_format", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    suite = args.suite_flag or args.suite
    if suite:
        values["suite"] = suite
    if "orders" in values and "order_samples" in values and args.orders is not None:
        del values["order_samples"]
    return SweepConfig(**values).validate()


def _print_summary(summary: dict, out=sys.stderr) -> None:
    for suite, s in summary.items():
        print(f"{suite}: {s['passed']}/{s['records']} passed, min margin {s['min_margin_bits']} bits, "
              f"{s['not_converged']} not converged, {len(s['counterexample_candidates'])} candidates", file=out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            cfg = config_from_args(args)
            report = run_sweep(cfg)
            write_report(report, cfg.output_path, cfg.output_format)
            _print_summary(report.summary)
            return 0 if not candidates(report) else 1
        if args.command == "report":
            fmt = args.output_format or ("json" if args.path.endswith(".json") else "csv")
            with open(args.path, encoding="utf-8") as fh:
                recs = parse_report(fh.read(), fmt)
            summary = summarize(recs, args.tolerance_bits)
            _print_summary(summary, sys.stdout)
            return 0 if not any(s["counterexample_candidates"] for s in summary.values()) else 1
        if args.command == "selftest":
            from .acceptance import run_battery
            results, records = run_battery(seed=args.seed, workers=args.workers, only=args.only,
                                           report=lambda res: print(res.line(), flush=True))
            if args.output_path:
                write_report(SweepReport(records, summarize(records, 1e-6)), args.output_path, "csv")
            return 0 if all(r.passed for r in results) else 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())

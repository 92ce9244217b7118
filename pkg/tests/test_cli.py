import json
import math

import pytest

from renyidecomp.cli import (
    FIELDS,
    SweepConfig,
    SweepReport,
    emit_report,
    load_config_file,
    main,
    parse_orders,
    parse_report,
    run_sweep,
)
from renyidecomp.linalg import ValidationError
from renyidecomp.relations import Batch, sanity_batch, sanity_partner
from renyidecomp.states import random_state


def test_determinism():
    cfg = SweepConfig(suite="sanity", dims=((2, 2),), trials=10, seed=7)
    assert emit_report(run_sweep(cfg), "csv") == emit_report(run_sweep(cfg), "csv")


def test_thm1_record_count():
    rep = run_sweep(SweepConfig(suite="thm1", trials=100, seed=3))
    assert len(rep.records) == 400
    assert rep.summary["thm1"]["failed"] == 0


def test_hall_summary():
    rep = run_sweep(SweepConfig(suite="exclusion", trials=9, seed=1))
    hall = [r for r in rep.records if r.name == "hall_limit" and r.dims[0] == 2 and r.trial % 3 == 0]
    assert hall and all(r.rhs == 1.0 for r in hall)
    assert min(r.margin for r in hall) >= 0


def test_workers_do_not_change_results():
    one = run_sweep(SweepConfig(suite="chain", dims=((2, 2), (2, 3)), trials=8, seed=2, order_samples=2))
    two = run_sweep(SweepConfig(suite="chain", dims=((2, 2), (2, 3)), trials=8, seed=2, order_samples=2, workers=2))
    assert emit_report(one) == emit_report(two)


def test_header_only_csv():
    assert emit_report(SweepReport([], {}), "csv") == ",".join(FIELDS) + "\n"


def _bell_record():
    bell = random_state("max_entangled", (2, 2), 0)
    rec = sanity_batch(Batch([bell], [0]), 0, [sanity_partner(bell, 1)])[0]
    rec.suite, rec.trial = "sanity", 0
    return rec


def test_bell_row():
    text = emit_report(SweepReport([_bell_record()], {}), "csv")
    row = dict(zip(FIELDS, text.splitlines()[1].split(",")))
    assert float(row["margin_bits"]) >= -1e-6
    assert row["dimA"] == "2" and row["converged"] == "true"


def test_json_round_trip():
    rec = _bell_record()
    doc = emit_report(SweepReport([rec], {}), "json")
    back = parse_report(doc, "json")[0]
    for key in ("name", "suite", "seed", "trial", "dims", "soundness", "converged"):
        assert getattr(back, key) == getattr(rec, key)
    for key in ("lhs", "rhs", "margin"):
        assert getattr(back, key) == pytest.approx(getattr(rec, key), rel=1e-11, abs=1e-300)
    for x, y in zip(back.orders, rec.orders):
        assert (math.isnan(x) and math.isnan(y)) or x == pytest.approx(y, rel=1e-11)
    json.loads(doc)


def test_csv_round_trip_of_sweep():
    rep = run_sweep(SweepConfig(suite="exclusion", trials=3, seed=5))
    back = parse_report(emit_report(rep, "csv"), "csv")
    assert [r.name for r in back] == [r.name for r in rep.records]
    assert any(math.isinf(r.orders[0]) for r in back)


def test_config_validation():
    with pytest.raises(ValidationError, match="suite"):
        SweepConfig(suite="nope").validate()
    with pytest.raises(ValidationError, match="trials"):
        SweepConfig(trials=0).validate()
    with pytest.raises(ValidationError, match="dims"):
        SweepConfig(dims=((1, 2),)).validate()
    with pytest.raises(ValidationError, match="orders"):
        run_sweep(SweepConfig(suite="thm1", orders=((3, 0.8, 0.9),)))


def test_parse_orders():
    assert parse_orders("4/3,2,2; inf,1/2,4/3") == ((4 / 3, 2.0, 2.0), (math.inf, 0.5, 4 / 3))


def test_config_file_and_flags(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("suite = thm1\ndims = 2x2\ntrials = 3  # small\nseed = 4\n")
    assert load_config_file(str(cfg))["dims"] == ((2, 2),)
    out = tmp_path / "r.csv"
    code = main(["verify", "--config", str(cfg), "--trials", "2", "--orders", "4/3,2,2", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(FIELDS) and len(lines) == 1 + 8
    assert main(["report", str(out)]) == 0
    assert "thm1: 8/8 passed" in capsys.readouterr().out


def test_cli_error_exit(tmp_path, capsys):
    assert main(["verify", "--suite", "thm1", "--orders", "3,0.8,0.9"]) == 2
    assert "orders" in capsys.readouterr().err

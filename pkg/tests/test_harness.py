import csv
import io
import json

import numpy as np
import pytest

from gbispectrum.exceptions import InvalidParameterError
from gbispectrum.harness import (
    AUDIT_FIELDS,
    BENCH_FIELDS,
    REPORT_FIELDS,
    TrialConfig,
    bench_row,
    loglog_slope,
    random_signal,
    reports_to_json,
    rows_to_csv,
    run_count_audit,
    run_invariance_trial,
    run_inversion_trial,
    run_parity_checks,
    timing_sweep,
)


def test_config_validation():
    assert TrialConfig("CnonCn").module == "cn"
    with pytest.raises(InvalidParameterError):
        TrialConfig("cn", trials=0)
    with pytest.raises(InvalidParameterError):
        TrialConfig("cn", mode="both")


def test_random_signal_determinism():
    a = random_signal("cn", {"n": 16}, seed=3)
    assert np.array_equal(a, random_signal("cn", {"n": 16}, seed=3))
    b = random_signal("cn", {"n": 16}, seed=4)
    assert np.linalg.norm(a - b) / np.linalg.norm(a) >= 1e-2
    f = random_signal("so3", {"L": 4}, seed=1)
    assert f.reality_error() < 1e-12


def test_invariance_report():
    rep = run_invariance_trial(TrialConfig("octa", trials=2))
    assert rep.invariance_max_rel <= 1e-10
    assert rep.selective_count == 172 and rep.full_count == 576
    assert set(rep.to_dict()) == set(REPORT_FIELDS)


def test_inversion_report():
    rep = run_inversion_trial(TrialConfig("torus", {"a": 4, "b": 4}, trials=3))
    assert rep.inversion_residual <= 1e-8
    with pytest.raises(InvalidParameterError):
        run_inversion_trial(TrialConfig("dn", {"n": 4}))


def test_count_audit_hard_rows_pass():
    rows = run_count_audit()
    assert all(r["status"] == "PASS" for r in rows if r["kind"] == "hard")
    assert {r["status"] for r in rows if r["kind"] == "soft"} <= {"PASS", "SOFT-MISS"}
    assert all(tuple(r) == AUDIT_FIELDS for r in rows)


def test_parity_checks_pass():
    checks = run_parity_checks(L=6, witnesses=4)
    assert all(c["pass"] for c in checks.values())


def test_bench_row_and_sweep():
    row = bench_row("cn", {"n": 16}, batch=2, runs=3, warmup=1)
    assert tuple(row) == BENCH_FIELDS and row["full_count"] == 136
    assert row["selective_p10_ms"] <= row["selective_median_ms"] <= row["selective_p90_ms"]
    sweep = timing_sweep("cn", [8, 16], batch=2, runs=3, warmup=1)
    assert len(sweep["rows"]) == 2 and "slope_gap" in sweep
    with pytest.raises(InvalidParameterError):
        timing_sweep("cn", [8])


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert np.isclose(loglog_slope(x, 3 * x**2), 2.0)


def test_serialization_round_trip():
    rep = run_invariance_trial(TrialConfig("cn", {"n": 8}, trials=1))
    data = json.loads(reports_to_json([rep]))
    assert data[0]["module"] == "cn" and data[0]["size"] == {"n": 8}
    rows = list(csv.DictReader(io.StringIO(rows_to_csv([rep], REPORT_FIELDS))))
    assert rows[0]["size"] == "n=8" and float(rows[0]["invariance_max_rel"]) <= 1e-10

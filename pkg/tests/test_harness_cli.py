"""Experiment drivers and the command line: file formats, reproducible
output, partial flushes, and exit codes."""

import csv
import json
import math

import numpy as np
import pytest

from bridge_kmt import NumericError, SpecError, rng
from bridge_kmt import harness
from bridge_kmt.cli import main, parse_dist
from bridge_kmt.harness import (
    COUNTER_FIELDS,
    SCALING_FIELDS,
    ExperimentSpec,
    resolve_z,
    run_counterexample,
    run_scaling,
    run_tails,
    spiky_conditional,
)
from bridge_kmt.jump_dist import bernoulli, exponential, geometric


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# endpoint selection


def test_resolve_z_rules():
    d = bernoulli(0.5)
    assert resolve_z(d, 10, "mean_slope") == 5.0
    assert resolve_z(d, 10, ("fixed", 3.4)) == 3.0
    assert resolve_z(d, 10, ("fixed", 99.0)) == 9.0      # clamped inside support
    assert resolve_z(d, 10, ("fixed", -5.0)) == 1.0
    assert resolve_z(d, 10, ("offset", 1.0)) == round(5 + math.sqrt(10))
    e = exponential(1.0)
    assert resolve_z(e, 10, ("fixed", 3.4)) == 3.4       # continuous: no rounding
    g = geometric(0.5)
    assert resolve_z(g, 10, "mean_slope") == 10.0        # one-sided support: no upper clamp
    assert resolve_z(g, 10, ("fixed", -2.0)) == 1.0
    with pytest.raises(SpecError):
        resolve_z(d, 10, ("quantile", 0.5))


def test_experiment_spec_validation():
    with pytest.raises(SpecError):
        ExperimentSpec(kind="melt")
    with pytest.raises(SpecError):
        ExperimentSpec(kind="scaling", fmt="yaml")
    with pytest.raises(SpecError):
        ExperimentSpec(kind="scaling", samples=0)
    with pytest.raises(SpecError):
        ExperimentSpec(kind="scaling", n_list=(8, 8))
    with pytest.raises(SpecError):
        ExperimentSpec(kind="scaling", a=0.0)


# ---------------------------------------------------------------------------
# spiky two-step conditional, exact enumeration


def test_spiky_conditional_concentrates_on_the_matched_pair():
    # z = 6: the only pair of spikes summing to 6 is (3^6 + 6, -3^6), since
    # every mixed pair pays at least an exp(-1e100) off-spike factor
    atoms, ws, mass, mean, std, lstd, exceeded = spiky_conditional(6)
    assert not exceeded
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert mean == 3                    # exact Fraction midpoint of 735 and -729
    assert std == pytest.approx(732.0, rel=1e-12)
    assert ws.sum() == pytest.approx(1.0, abs=1e-12)


def test_spiky_conditional_spread_explodes_with_z():
    _, _, mass, _, std, lstd, _ = spiky_conditional(18)
    assert mass == pytest.approx(1.0, abs=1e-9)
    assert std == pytest.approx(3.0 ** 18 + 9.0, rel=1e-7)
    assert std >= 1e8
    assert lstd == pytest.approx(18 * math.log10(3.0), abs=1e-3)


def test_counterexample_table():
    res = run_counterexample(m_list=(1, 2))
    kinds = [r["row_kind"] for r in res.rows]
    assert kinds.count("spiky") == 2 and kinds.count("contrast") == 5
    spiky = {r["m"]: r for r in res.rows if r["row_kind"] == "spiky"}
    assert spiky[1]["z"] == 6 and spiky[2]["z"] == 18
    assert spiky[1]["conditional_std"] == pytest.approx(732.0, rel=1e-9)
    assert spiky[2]["conditional_std"] >= 1e8
    # log-concave contrasts concentrate: spread comparable to one jump
    for r in res.rows:
        if r["row_kind"] == "contrast":
            assert r["conditional_std"] <= 2.0 * r["jump_sd"]
    with pytest.raises(SpecError):
        run_counterexample(m_list=(0,))


def test_counterexample_csv_quotes_commas(tmp_path):
    out = tmp_path / "counter.csv"
    run_counterexample(m_list=(1,), out=str(out), fmt="csv")
    header, rows = read_csv(str(out))
    assert header == COUNTER_FIELDS
    labels = [r[1] for r in rows]
    assert "uniform_int(0,2)" in labels          # embedded comma survives
    assert all(len(r) == len(COUNTER_FIELDS) for r in rows)


# ---------------------------------------------------------------------------
# scaling driver


def scaling_spec(out=None, fmt="csv", samples=300):
    return ExperimentSpec(kind="scaling", dist=bernoulli(0.5),
                          n_list=(8, 16, 32), samples=samples, seed=5,
                          out=out, fmt=fmt)


def test_run_scaling_schema_and_fit(tmp_path):
    out = tmp_path / "scaling.csv"
    res = run_scaling(scaling_spec(str(out)))
    header, rows = read_csv(str(out))
    assert header == SCALING_FIELDS
    assert [int(r[0]) for r in rows] == [8, 16, 32]
    assert [float(r[1]) for r in rows] == [4.0, 8.0, 16.0]
    assert res.fit is not None and res.diffusive is not None
    assert all(float(r[3]) >= 0.0 for r in rows)
    # medians grow with n for a sane coupler
    meds = [float(r[3]) for r in rows]
    assert meds[-1] > meds[0]


def test_run_scaling_bytes_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_scaling(scaling_spec(str(a)))
    run_scaling(scaling_spec(str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_run_scaling_json_mirror(tmp_path):
    csv_out, json_out = tmp_path / "s.csv", tmp_path / "s.json"
    run_scaling(scaling_spec(str(csv_out)))
    run_scaling(scaling_spec(str(json_out), fmt="json"))
    with open(json_out) as fh:
        rows = json.load(fh)
    assert [set(r) for r in rows] == [set(SCALING_FIELDS)] * 3
    _, crows = read_csv(str(csv_out))
    for jr, cr in zip(rows, crows):
        assert jr["delta_median"] == float(cr[3])


def test_run_scaling_flushes_partial_rows(tmp_path, monkeypatch):
    out = tmp_path / "partial.csv"
    real = harness.sample_deltas
    calls = {"k": 0}

    def explode_on_second(*args, **kwargs):
        calls["k"] += 1
        if calls["k"] >= 2:
            raise NumericError("synthetic failure")
        return real(*args, **kwargs)

    monkeypatch.setattr(harness, "sample_deltas", explode_on_second)
    with pytest.raises(NumericError):
        run_scaling(scaling_spec(str(out)))
    header, rows = read_csv(str(out))
    assert header == SCALING_FIELDS
    assert len(rows) == 1 and int(rows[0][0]) == 8


# ---------------------------------------------------------------------------
# tails driver


def test_run_tails_survival_curve():
    spec = ExperimentSpec(kind="tails", dist=bernoulli(0.5), n_list=(64,),
                          samples=20000, seed=9)
    res = run_tails(spec)
    xs = [r["x"] for r in res.rows]
    surv = [r["survival"] for r in res.rows]
    assert len(res.rows) == 41 and xs[0] == 0.0
    assert 0.0 < surv[0] <= 1.0
    assert all(a >= b for a, b in zip(surv, surv[1:]))
    assert res.m0 > 0.0
    if res.lam is not None:
        assert res.lam > 0.0 and 0.0 <= res.r2 <= 1.0
    with pytest.raises(SpecError):
        run_tails(ExperimentSpec(kind="tails", dist=bernoulli(0.5),
                                 n_list=(8, 16)))


# ---------------------------------------------------------------------------
# command line


def test_cli_couple_csv(tmp_path, capsys):
    out = tmp_path / "couple.csv"
    code = main(["couple", "--dist", "bernoulli,p=0.5", "--n", "8", "--z", "4",
                 "--samples", "5", "--seed", "3", "--out", str(out)])
    assert code == 0
    header, rows = read_csv(str(out))
    assert header == ["seed_path", "z", "delta", "midpoint_W"]
    assert len(rows) == 5
    assert [int(r[0]) for r in rows] == [rng.sample_seed(3, i) for i in range(5)]
    assert "backend=" in capsys.readouterr().err


def test_cli_couple_dump_paths(tmp_path):
    out = tmp_path / "paths.csv"
    code = main(["couple", "--dist", "uniform_int,lo=0,hi=2", "--n", "4",
                 "--z", "4", "--samples", "3", "--dump-paths", "--out", str(out)])
    assert code == 0
    header, rows = read_csv(str(out))
    assert header[4:8] == ["s_0", "b_0", "s_1", "b_1"]
    for r in rows:
        assert r[header.index("s_0")] == "0" and r[header.index("s_4")] == "4"
        assert float(r[header.index("b_0")]) == 0.0
        assert float(r[header.index("b_4")]) == 0.0


def test_cli_analyze(tmp_path):
    out = tmp_path / "analyze.csv"
    assert main(["analyze", "--dist", "bernoulli,p=0.3", "--out", str(out)]) == 0
    header, rows = read_csv(str(out))
    assert header == ["assumption_id", "status", "detail", "measured"]
    assert [r[0] for r in rows] == ["D1", "D2", "D3", "D4", "D5"]

    jout = tmp_path / "analyze.json"
    assert main(["analyze", "--dist", "exponential,mu=1.0", "--format", "json",
                 "--out", str(jout)]) == 0
    doc = json.loads(jout.read_text())
    assert doc["family"] == "exponential" and doc["log_concave"] is True


def test_cli_density(tmp_path, capsys):
    out = tmp_path / "dens.csv"
    code = main(["density", "--dist", "bernoulli,p=0.5", "--n-list",
                 "64,128,256,512", "--out", str(out)])
    assert code == 0
    header, rows = read_csv(str(out))
    assert header == ["engine", "N", "z", "log_density", "diff_vs_fft"]
    assert len(rows) == 12
    saddle = {int(r[1]): float(r[3]) for r in rows if r[0] == "saddle"}
    fft = {int(r[1]): float(r[3]) for r in rows if r[0] == "fft_exact"}
    for n in (64, 128, 256, 512):
        assert abs(saddle[n] - fft[n]) < 1e-6
    assert "gap rate fit" in capsys.readouterr().err


def test_cli_scaling_and_tails(tmp_path, capsys):
    out = tmp_path / "sc.csv"
    code = main(["scaling", "--dist", "bernoulli,p=0.5", "--n-list", "8,16,32",
                 "--samples", "200", "--seed", "1", "--out", str(out)])
    assert code == 0
    assert "log fit" in capsys.readouterr().err

    tout = tmp_path / "tails.csv"
    code = main(["tails", "--dist", "bernoulli,p=0.5", "--n", "32",
                 "--samples", "4000", "--out", str(tout)])
    assert code == 0
    header, rows = read_csv(str(tout))
    assert header == ["x", "survival"] and len(rows) == 41
    assert "m0=" in capsys.readouterr().err


def test_cli_counterexample_stdout(capsys):
    assert main(["counterexample", "--m-list", "1"]) == 0
    out = capsys.readouterr().out
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == COUNTER_FIELDS
    assert any("uniform_int(0,2)" in r for r in rows[1:])


def test_cli_json_format(capsys):
    assert main(["couple", "--dist", "bernoulli,p=0.5", "--n", "4", "--z", "2",
                 "--samples", "2", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 2 and set(rows[0]) == {"seed_path", "z", "delta",
                                               "midpoint_W"}


def test_cli_exit_codes(capsys):
    # unknown family: bad request
    assert main(["analyze", "--dist", "laplace,b=1"]) == 2
    # malformed shorthand
    assert main(["analyze", "--dist", "bernoulli,p"]) == 2
    # slope outside the support: bad request
    assert main(["couple", "--dist", "bernoulli,p=0.5", "--n", "4", "--z", "9",
                 "--samples", "1"]) == 2
    # attainable slope, unattainable endpoint parity: numeric failure
    spread = json.dumps({"family": "tabulated_pmf", "support_lo": 0,
                         "weights": [0.5, 0.0, 0.5]})
    assert main(["couple", "--dist", spread, "--n", "2", "--z", "1",
                 "--samples", "1"]) == 3
    capsys.readouterr()


def test_parse_dist_variants(tmp_path):
    assert parse_dist("geometric,q=0.5").family == "geometric"
    assert parse_dist('{"family":"bernoulli","params":{"p":0.25}}').params == {"p": 0.25}
    spec_file = tmp_path / "law.json"
    spec_file.write_text('{"family":"exponential","params":{"mu":2.0}}')
    assert parse_dist(str(spec_file)).family == "exponential"
    with pytest.raises(SpecError):
        parse_dist("bernoulli,p=zebra")

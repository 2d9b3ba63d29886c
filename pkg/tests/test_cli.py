import json
import math
import subprocess
import sys

import numpy as np
import pytest

from matchmarket import MarriagePolicy, RngStream, build_affinity, run_trajectory
from matchmarket.cli import EXIT_CONFIG, EXIT_DATA, EXIT_MISMATCH, EXIT_OK, main
from matchmarket.config import ExperimentConfig, load_config, parse_lambda, parse_spec
from matchmarket.errors import ConfigError, DataError, DegenerateSeriesError, ParseError, RangeError
from matchmarket.fit import fit_cohorts, fit_model_to_series, predict
from matchmarket.realdata import (
    RealSeries,
    ingest_marriage_series,
    load_bundled_series,
    parse_marriage_series,
)
from matchmarket.stats import summarize_step
from matchmarket.sweep import (
    EXACT_HEADER,
    TRAJECTORY_HEADER,
    cell_filename,
    read_summary,
    replay,
    run_sweep,
)

TOML = """
schema = 1

[population]
n = 200
steps = 12

[affinity]
offdiag = { family = "uniform", mu = 0.0, sigma = 1.0 }

[policy]
kind = "fixed"
lambda = [1.0, 0.0, "none"]

[run]
seeds = [0, 1]
analytic = true
analytic_steps = 2
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(TOML)
    return p


@pytest.fixture
def small_cfg(cfg_path, tmp_path):
    return load_config(cfg_path, output_dir=str(tmp_path / "out"))


# config ---------------------------------------------------------------------

def test_load_config(small_cfg):
    assert small_cfg.n == 200 and small_cfg.steps == 12
    assert small_cfg.lambdas == (1.0, 0.0, math.inf)
    labels = [lab for lab, _ in small_cfg.policies()]
    assert labels == ["1", "0", "none"]
    assert small_cfg.policies()[2][1] == MarriagePolicy.none()


@pytest.mark.parametrize("old, new, field", [
    ('n = 200', 'n = 1', "population.n"),
    ('lambda = [1.0, 0.0, "none"]', 'lambda = ["soon"]', "policy.lambda"),
    ('kind = "fixed"', 'kind = "sometimes"', "policy.kind"),
    ('seeds = [0, 1]', 'seeds = [0, 0]', "run.seeds"),
    ('analytic = true', 'analytic = true\nn_max = 2', "run.n_max"),
    ('steps = 12', 'steps = 12\ncolour = "red"', "population.colour"),
    ('family = "uniform"', 'family = "cauchy"', "affinity.offdiag.family"),
])
def test_config_errors_name_the_field(tmp_path, old, new, field):
    p = tmp_path / "bad.toml"
    p.write_text(TOML.replace(old, new))
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        load_config(p)


def test_schema_required(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(TOML.replace("schema = 1", "schema = 2"))
    with pytest.raises(ConfigError, match="schema"):
        load_config(p)


def test_hash_ignores_output_dir_and_workers(small_cfg):
    a = small_cfg.with_overrides(output_dir="elsewhere", workers=4)
    assert a.hash() == small_cfg.hash()
    assert small_cfg.with_overrides(steps=13).hash() != small_cfg.hash()


def test_overrides_and_round_trip(small_cfg):
    c = small_cfg.with_overrides(n=64, lambdas=[math.inf])
    assert c.n == 64 and c.lambdas == (math.inf,)
    assert ExperimentConfig.from_dict(small_cfg.to_dict()) == small_cfg
    assert small_cfg.with_overrides() is small_cfg


def test_parsers():
    assert parse_lambda("none") == math.inf and parse_lambda("1.5") == 1.5
    for bad in ("nan", "-inf", True, "x"):
        with pytest.raises(ConfigError):
            parse_lambda(bad)
    s = parse_spec("gaussian:0:2", "x")
    assert s.sigma == 2.0
    assert parse_spec({"family": "point_mass", "value": 0.5}, "x").mu == 0.5
    with pytest.raises(ConfigError):
        parse_spec("gaussian:0:-1", "x")


def test_partition_config_checked():
    with pytest.raises(ConfigError, match="partitions.sizes"):
        ExperimentConfig(n=10, partition_sizes=(4, 5))
    c = ExperimentConfig(n=10, partition_sizes=(5, 5))
    assert c.partitions().groups[0].tolist() == [0, 1, 2, 3, 4]


# sweep ------------------------------------------------------------------------

def test_sweep_files_and_headers(small_cfg):
    res = run_sweep(small_cfg)
    out = res.output_dir
    names = set(res.files)
    for lab in ("1", "0", "none"):
        for seed in (0, 1):
            assert cell_filename(lab, seed) in names
    assert {"trajectories.csv", "summary.csv", "analytic.csv", "analytic_exact.csv",
            "densities.json"} <= names
    for name in names:
        text = (out / name).read_text()
        if name.endswith(".json"):
            d = json.loads(text)
            assert (d["config_hash"], d["seeds"]) == (small_cfg.hash(), [0, 1])
        else:
            assert text.splitlines()[0] == f"# config_hash={small_cfg.hash()} seeds=0,1"
    cell = (out / cell_filename("none", 0)).read_text().splitlines()
    assert cell[1] == TRAJECTORY_HEADER
    assert len(cell) - 2 == small_cfg.steps + 1
    assert (out / "analytic.csv").read_text().splitlines()[1] == TRAJECTORY_HEADER
    exact = (out / "analytic_exact.csv").read_text().splitlines()
    assert exact[1] == EXACT_HEADER and exact[3].startswith("1,1/4,3/4,1/3,")
    assert exact[4].startswith("2,1861/5184,3323/5184,")
    dens = json.loads((out / "densities.json").read_text())
    assert dens["steps"]["1"]["couple"] == ["1/4", "1/8"]


def test_cell_rows_match_direct_simulation(small_cfg):
    res = run_sweep(small_cfg)
    rows = (res.output_dir / cell_filename("1", 1)).read_text().splitlines()[2:]
    rng = RngStream(1)
    A = build_affinity(200, small_cfg.offdiag, small_cfg.offdiag, rng)
    tr = run_trajectory(A, 12, MarriagePolicy.fixed(1.0), rng=rng)
    last = rows[-1].split(",")
    s = summarize_step(tr.final)
    assert int(last[0]) == 12 and float(last[3]) == float(f"{s.mean_utility:.12g}")
    assert float(last[7]) == float(f"{s.married_share:.12g}")


def test_rerun_is_byte_identical(small_cfg, tmp_path):
    a = run_sweep(small_cfg, output_dir=tmp_path / "a")
    b = run_sweep(small_cfg, output_dir=tmp_path / "b", workers=2)
    assert a.files == b.files
    for name in a.files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_replay_detects_changes(small_cfg, tmp_path):
    res = run_sweep(small_cfg)
    assert replay(res.manifest, tmp_path / "again") == []
    m = json.loads(res.manifest.read_text())
    m["files"]["summary.csv"] = "0" * 64
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(m))
    assert replay(bad, tmp_path / "third") == ["summary.csv"]
    with pytest.raises(ConfigError):
        replay(res.manifest, res.output_dir)


def test_unwritable_output_dir(small_cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigError, match="output_dir"):
        run_sweep(small_cfg, output_dir=blocker / "sub")


def test_read_summary(small_cfg):
    res = run_sweep(small_cfg)
    s = read_summary(res.output_dir / "summary.csv")
    t, married, mean = s["0"]
    assert t.tolist() == list(range(13))
    assert np.all(np.diff(married) >= 0)
    assert np.all(s["none"][1] == 0)


# real data ----------------------------------------------------------------------

def test_parse_single_row():
    (s,) = parse_marriage_series(["cohort,age_years,share_married", "1940,30,0.85"])
    assert s.cohort == "1940" and s.points == ((30.0, 0.85),)


@pytest.mark.parametrize("rows, exc, line", [
    (["cohort,age_years,share_married", "1940,30,0.8", "1940,25,0.9"], ParseError, 3),
    (["cohort,age_years,share_married", "1940,30,1.2"], RangeError, 2),
    (["cohort,age_years,share_married", "1940,thirty,0.2"], ParseError, 2),
    (["cohort,age_years,share_married", "1940,30"], ParseError, 2),
    (["cohort,age,share", "1940,30,0.2"], ParseError, 1),
])
def test_parse_errors_carry_line(rows, exc, line):
    with pytest.raises(exc) as info:
        parse_marriage_series(rows)
    assert info.value.line == line and f"line {line}" in str(info.value)


def test_parse_no_rows():
    with pytest.raises(DataError):
        parse_marriage_series(["# only a comment", "cohort,age_years,share_married"])


def test_bundled_series():
    series = load_bundled_series()
    assert [s.cohort for s in series] == ["1940", "1950", "1960", "1970", "1980"]
    for s in series:
        assert np.all(np.diff(s.ages) > 0) and np.all((s.shares >= 0) & (s.shares <= 1))


def test_ingest_missing_file(tmp_path):
    with pytest.raises(DataError):
        ingest_marriage_series(tmp_path / "nope.csv")


# fitting ----------------------------------------------------------------------

LAMS = (-2.0, 0.0, 0.5, 1.0, 1.5, math.inf)


@pytest.fixture(scope="module")
def share_curves():
    curves = {}
    gauss = parse_spec("gaussian:0:1", "x")
    for lam in LAMS:
        acc = []
        for seed in range(3):
            rng = RngStream(seed)
            A = build_affinity(2000, gauss, gauss, rng)
            pol = MarriagePolicy.none() if lam == math.inf else MarriagePolicy.fixed(lam)
            tr = run_trajectory(A, 100, pol, rng=rng)
            acc.append([s.married.mean() for s in tr.states])
        curves[lam] = np.mean(acc, axis=0)
    return curves


def test_self_fit_round_trip(share_curves):
    ages = np.arange(18.0, 51.0, 1.0)
    truth = predict(share_curves[1.0], ages, 0.35, 16.0)
    noisy = np.clip(truth + np.random.default_rng(0).normal(0, 0.01, ages.size), 0, 1)
    rep = fit_model_to_series(share_curves, RealSeries("sim", tuple(zip(ages, noisy))))
    assert rep.lam == 1.0
    assert rep.rmse < 0.02


def test_identical_curves_give_zero_rmse(share_curves):
    ages = np.arange(20.0, 40.0, 2.0)
    exact = predict(share_curves[0.5], ages, 0.5, 15.0)
    rep = fit_model_to_series(share_curves, RealSeries("same", tuple(zip(ages, exact))))
    assert rep.rmse == 0 and rep.lam == 0.5
    assert (rep.slope, rep.intercept) == (0.5, 15.0)
    assert rep.step_of(25.0) == 20.0


def test_fit_degenerate_inputs(share_curves):
    good = RealSeries("x", ((20, 0.1), (25, 0.5), (30, 0.7)))
    with pytest.raises(DegenerateSeriesError):
        fit_model_to_series({1.0: share_curves[1.0]}, good)
    with pytest.raises(DegenerateSeriesError):
        fit_model_to_series(share_curves, RealSeries("x", ((20, 0.1), (25, 0.5))))
    with pytest.raises(DegenerateSeriesError):
        fit_model_to_series(share_curves, RealSeries("x", ((20, 0.3), (25, 0.3), (30, 0.3))))


def test_later_cohort_fits_higher_threshold(share_curves):
    # conditional on the bundled illustrative transcription
    reports = fit_cohorts(share_curves, load_bundled_series())
    assert reports["1980"].lam >= reports["1940"].lam


# command line -------------------------------------------------------------------

def test_cli_simulate_stdout(capsys):
    assert main(["simulate", "--n", "50", "--steps", "3", "--lambda", "0.5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# config_hash=") and lines[1] == TRAJECTORY_HEADER
    assert len(lines) == 2 + 4 and lines[2].split(",")[1] == "0.5"


def test_cli_sweep_and_replay(cfg_path, tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(cfg_path), "--output-dir", str(out)]) == EXIT_OK
    assert main(["replay", str(out / "manifest.json"), "--output-dir", str(tmp_path / "r")]) == EXIT_OK
    m = json.loads((out / "manifest.json").read_text())
    m["files"]["trajectories.csv"] = "bad"
    (tmp_path / "m.json").write_text(json.dumps(m))
    assert main(["replay", str(tmp_path / "m.json"), "--output-dir", str(tmp_path / "r2")]) == EXIT_MISMATCH


def test_cli_analytic_exact(capsys):
    assert main(["analytic", "--steps", "2", "--lambda", "1"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,b,r,m1,m2,m3,m4"
    assert out[2].startswith("1,1/4,3/4,1/3,")
    assert out[3].startswith("2,1861/5184,3323/5184,")
    assert "1,25/16" in out


def test_cli_stable_baseline(capsys):
    assert main(["stable-baseline", "--n", "40", "--seeds", "0", "1"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "seed,u_gs,proposer_mean,reviewer_mean,proposals" and len(out) == 4


def test_cli_fit(cfg_path, tmp_path, capsys):
    out = tmp_path / "s"
    main(["sweep", "--config", str(cfg_path), "--output-dir", str(out)])
    capsys.readouterr()
    assert main(["fit", "--summary", str(out / "summary.csv")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "cohort,lambda,slope,intercept,rmse" and len(lines) == 6


def test_cli_exit_codes(tmp_path):
    assert main(["simulate", "--lambda", "soon"]) == EXIT_CONFIG
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--summary", "x"]) == EXIT_DATA
    bad = tmp_path / "bad.csv"
    bad.write_text("cohort,age_years,share_married\n1940,30,7\n")
    assert main(["fit", "--data", str(bad), "--summary", "x"]) == EXIT_DATA
    assert main(["fit"]) == EXIT_CONFIG


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "matchmarket.cli", "analytic", "--steps", "1"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and "1,1/4,3/4" in r.stdout

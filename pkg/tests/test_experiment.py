import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from kacsim.env import resolve_spec
from kacsim.experiment import (
    density_rows,
    replicate_chunks,
    run_compare,
    run_perfect,
    run_sample,
    sample_v1,
)
from kacsim.schemas import OracleUnavailableError


def spec(command, **values):
    return resolve_spec(command, values, ignore_env=True)


def test_replicate_chunks():
    assert replicate_chunks(10, 1) == [(0, 10)]
    assert replicate_chunks(10, 3) == [(0, 4), (4, 8), (8, 10)]
    assert replicate_chunks(2, 8) == [(0, 1), (1, 2)]
    with pytest.raises(ValueError):
        replicate_chunks(0, 2)


def test_density_limit_rows():
    rows = density_rows(spec("density", curve="limit", grid="-5:5:0.1"))
    assert len(rows) == 101
    middle = rows[50]
    assert middle["v"] == pytest.approx(0.0, abs=1e-12)
    assert middle["density"] == pytest.approx(0.325735, abs=1e-6)


def test_density_exact_at_zero_equals_initial():
    exact = density_rows(spec("density", curve="exact", t_final="0", grid="-5:5:0.1"))
    initial = density_rows(spec("density", curve="initial", grid="-5:5:0.1"))
    for a, b in zip(exact, initial):
        assert a["density"] == pytest.approx(b["density"], abs=1e-12)


def test_density_exact_integrates_to_one():
    rows = density_rows(spec("density", curve="exact", t_final="2", grid="-8:8:0.01"))
    v = np.array([r["v"] for r in rows])
    f = np.array([r["density"] for r in rows])
    assert trapezoid(f, v) == pytest.approx(1.0, abs=1e-4)


def test_sample_single_replicate():
    report = run_sample(spec("sample", algorithms="bird", n_particles="10", t_final="1", replicates=1))
    assert report.histogram.total == 1
    assert sum(r.count for r in report.rows) + report.histogram.underflow + report.histogram.overflow == 1


def test_sample_is_deterministic():
    run = spec("sample", algorithms="poisson", n_particles="20", t_final="2", replicates=500, seed=3)
    a, b = run_sample(run), run_sample(run)
    assert np.array_equal(a.histogram.counts, b.histogram.counts)
    assert a.summary == b.summary


def test_sample_summary_contents():
    report = run_sample(spec("sample", algorithms="poisson", n_particles="20", t_final="2", replicates=200))
    summary = report.summary
    for key in ("version", "spec", "seed", "bins", "tvn", "n_samples", "expected_savings",
                "mean_collisions_saved", "mean_collisions_processed"):
        assert key in summary
    assert summary["n_samples"] == 200
    assert summary["bins"] == "-5:5:0.1"
    assert summary["spec"]["seed"] == summary["seed"]


def test_sample_without_oracle_rate_has_no_tvn():
    report = run_sample(spec("sample", algorithms="bird", n_particles="10", t_final="1",
                             lam=1.0, replicates=50))
    assert report.summary["tvn"] is None
    assert all(r.target_prob is None for r in report.rows)


def test_oracle_needs_oracle_rate():
    with pytest.raises(OracleUnavailableError):
        run_sample(spec("sample", algorithms="oracle", t_final="1", lam=1.0, replicates=10))


def test_tail_rows():
    report = run_sample(spec("sample", algorithms="oracle", t_final="2", replicates=2000, tail_from=2.5))
    assert len(report.tail_rows) == 25
    assert report.tail_rows[0].bin_lo == pytest.approx(2.5)


def test_parallel_equals_serial():
    serial = spec("sample", algorithms="bird", n_particles="20", t_final="2", replicates=400, workers=1)
    parallel = spec("sample", algorithms="bird", n_particles="20", t_final="2", replicates=400, workers=3)
    a, b = run_sample(serial), run_sample(parallel)
    assert np.array_equal(a.histogram.counts, b.histogram.counts)
    assert a.summary["tvn"] == b.summary["tvn"]


def test_sample_v1_offset_shifts_streams():
    run = spec("sample", algorithms="bird", n_particles="10", t_final="1", replicates=4)
    cfg = run.sim_config(run.cells()[0])
    whole = sample_v1(cfg, 1.0, 9, 8).v1
    shifted = sample_v1(cfg, 1.0, 9, 4, offset=4).v1
    assert np.array_equal(whole[4:], shifted)


def test_compare_single_cell_equals_sample():
    values = dict(algorithms="bird", n_particles="20", t_final="2", replicates=300, seed=11)
    rows, summary = run_compare(spec("compare", tvn_repeats=1, **values))
    sample = run_sample(spec("sample", **values))
    assert len(rows) == 1
    assert rows[0]["mean_tvn"] == sample.summary["tvn"]
    assert rows[0]["sd_tvn"] is None


def test_compare_rows():
    rows, summary = run_compare(spec("compare", algorithms="nanbu,bird,oracle", n_particles="5,10",
                                     dt="1.0", t_final="2", replicates=200, tvn_repeats=2))
    assert [(r["algorithm"], r["N"]) for r in rows] == [
        ("nanbu", 5), ("nanbu", 10), ("bird", 5), ("bird", 10), ("oracle", 5), ("oracle", 10),
    ]
    assert all(r["sd_tvn"] is not None and r["sd_tvn"] >= 0 for r in rows)
    assert summary["cells"] == rows


@pytest.mark.slow
def test_compare_poisson_not_worse_for_small_n():
    rows, _ = run_compare(spec("compare", algorithms="nanbu,bird,poisson", n_particles="5,10,20",
                               dt="0.01", t_final="2", replicates=10_000, tvn_repeats=10))
    by_cell = {(r["algorithm"], r["N"]): r for r in rows}
    for n in (5, 10, 20):
        poisson = by_cell[("poisson", n)]
        for other in ("nanbu", "bird"):
            rival = by_cell[(other, n)]
            se = math.hypot(poisson["sd_tvn"], rival["sd_tvn"]) / math.sqrt(10)
            assert poisson["mean_tvn"] <= rival["mean_tvn"] + 2 * se


def test_perfect_report():
    report = run_perfect(spec("perfect", n_particles="10", replicates=50, epsilon=1e-6))
    summary = report.summary
    assert summary["n_draws"] == 50
    assert summary["energy"] == 15.0
    assert summary["coarse_epsilon"] is False
    assert summary["coupling_time_min"] <= summary["coupling_time_mean"] <= summary["coupling_time_max"]
    assert len(report.draws) == 50
    assert report.histogram.total == 50


def test_perfect_harvest_all():
    report = run_perfect(spec("perfect", n_particles="10", replicates=20, harvest_all="true"))
    assert report.histogram.total == 200


def test_perfect_coarse_epsilon_flagged():
    report = run_perfect(spec("perfect", n_particles="10", replicates=20, epsilon=10.0))
    assert report.summary["coarse_epsilon"] is True
    assert report.summary["coupling_time_max"] == 1


def test_perfect_energy_override_targets_matching_gaussian():
    report = run_perfect(spec("perfect", n_particles="10", replicates=20, energy=10.0))
    assert report.summary["target"] == "N(0,1)"


def test_perfect_parallel_equals_serial():
    a = run_perfect(spec("perfect", n_particles="8", replicates=30, workers=1))
    b = run_perfect(spec("perfect", n_particles="8", replicates=30, workers=2))
    assert a.draws == b.draws

import math

import numpy as np
import pytest

from kacsim.analytic import density_curve, limit_density, sample_exact
from kacsim.metrics import (
    bin_masses,
    bin_probabilities,
    build_histogram,
    empty_histogram,
    histogram_of,
    histogram_rows,
    ks_distance,
    merge,
    tail_table,
    tvn_discrete,
    tvn_vs_density,
)
from kacsim.rng import RngStream
from kacsim.schemas import BinGeometry

CANONICAL = BinGeometry(lo=-5.0, hi=5.0, width=0.1)


def test_single_sample():
    h = build_histogram([0.05], 0.0, 1.0, 0.1)
    assert h.counts[0] == 1
    assert h.total == 1


def test_left_closed_bins():
    h = build_histogram([0.1, 0.0, 1.0, -0.01], 0.0, 1.0, 0.1)
    assert h.counts[1] == 1
    assert h.counts[0] == 1
    assert h.overflow == 1
    assert h.underflow == 1
    assert h.total == h.in_range + h.underflow + h.overflow


def test_canonical_geometry():
    assert CANONICAL.n_bins == 100
    assert CANONICAL.edges[-1] == 5.0
    assert CANONICAL.label() == "-5:5:0.1"


@pytest.mark.parametrize("lo, hi, width", [(0.0, 1.0, 0.3), (1.0, 0.0, 0.1), (0.0, 1.0, 0.0)])
def test_invalid_geometry(lo, hi, width):
    with pytest.raises(ValueError):
        build_histogram([0.5], lo, hi, width)


def test_normal_draws_rarely_leave_range():
    h = histogram_of(RngStream(71).normal(1_000_000), CANONICAL)
    assert h.underflow + h.overflow <= 10
    assert h.total == 1_000_000


def test_nan_rejected():
    with pytest.raises(ValueError):
        histogram_of([0.0, math.nan], CANONICAL)


def test_permutation_invariant():
    x = RngStream(72).normal(5000)
    a = histogram_of(x, CANONICAL)
    b = histogram_of(x[::-1].copy(), CANONICAL)
    assert np.array_equal(a.counts, b.counts)


def test_merge():
    s = RngStream(73)
    x, y = s.normal(300), s.normal(700)
    merged = merge(histogram_of(x, CANONICAL), histogram_of(y, CANONICAL))
    assert np.array_equal(merged.counts, histogram_of(np.concatenate([x, y]), CANONICAL).counts)
    assert merge(empty_histogram(CANONICAL), merged).total == 1000
    with pytest.raises(ValueError):
        merge(merged, build_histogram([0.0], -1.0, 1.0, 0.5))


def test_tvn_discrete_examples():
    assert tvn_discrete([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert tvn_discrete([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert tvn_discrete([0.5, 0.5], [1.0, 0.0]) == 0.5


def test_tvn_discrete_rejects_bad_vectors():
    with pytest.raises(ValueError):
        tvn_discrete([0.5, 0.5], [1.0])
    with pytest.raises(ValueError):
        tvn_discrete([0.5, 0.6], [0.5, 0.5])


def test_tvn_discrete_is_a_metric():
    s = RngStream(74)
    for _ in range(1000):
        p, q, r = (v / v.sum() for v in s.exponential((3, 12)))
        d_pq = tvn_discrete(p, q)
        assert d_pq == pytest.approx(tvn_discrete(q, p), abs=1e-15)
        assert 0.0 <= d_pq <= 1.0
        assert d_pq <= tvn_discrete(p, r) + tvn_discrete(r, q) + 1e-12


def test_bin_masses_integrate_density():
    masses = bin_masses(CANONICAL, limit_density)
    assert masses.sum() == pytest.approx(math.erf(5 / math.sqrt(3)), abs=1e-10)
    assert bin_probabilities(CANONICAL, limit_density).sum() == pytest.approx(1.0, abs=1e-12)


def test_tvn_vs_density_noise_floor_shrinks():
    s = RngStream(75)
    small = tvn_vs_density(histogram_of(sample_exact(math.inf, s, 10_000), CANONICAL), limit_density)
    large = tvn_vs_density(histogram_of(sample_exact(math.inf, s, 1_000_000), CANONICAL), limit_density)
    assert large < small
    assert 0.001 < large < 0.005


def test_tvn_vs_density_empty():
    with pytest.raises(ValueError):
        tvn_vs_density(empty_histogram(CANONICAL), limit_density)


def test_histogram_rows():
    h = build_histogram([0.05, 0.15, 0.15], 0.0, 0.3, 0.1)
    rows = histogram_rows(h, limit_density)
    assert [r.count for r in rows] == [1, 2, 0]
    assert rows[1].empirical_prob == pytest.approx(2 / 3)
    assert sum(r.target_prob for r in rows) == pytest.approx(1.0)
    assert histogram_rows(h)[0].target_prob is None


def test_tail_table():
    curve = density_curve("exact", 2.0)
    samples = sample_exact(2.0, RngStream(76), 200_000)
    rows = tail_table(histogram_of(samples, CANONICAL), curve, 2.5)
    assert len(rows) == 25
    assert rows[0].bin_lo == pytest.approx(2.5)
    assert all(r.bin_lo >= 2.5 - 1e-9 for r in rows)
    assert abs(rows[0].relative_error) < 0.1


def test_ks_distance():
    s = RngStream(77)
    assert ks_distance(s.normal(5000), s.normal(5000)) < 0.05
    assert ks_distance(s.normal(5000), s.normal(5000) + 1.0) > 0.3

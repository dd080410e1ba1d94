import math

import numpy as np
import pytest

from kacsim.collision import (
    TWO_PI,
    Ensemble,
    collide,
    initial_ensemble,
    kac_walk,
    kac_walk_step,
    rotate_sequence,
    total_energy,
)
from kacsim.analytic import limit_density
from kacsim.metrics import build_histogram, tvn_vs_density
from kacsim.rng import RngStream


def test_collide_examples():
    vi, vj = collide(1.0, 0.0, math.pi / 2)
    assert vi == pytest.approx(0.0, abs=1e-15)
    assert vj == pytest.approx(-1.0)
    assert collide(0.7, -1.2, 0.0) == (0.7, -1.2)
    vi, vj = collide(3.0, 4.0, 1.234)
    assert vi ** 2 + vj ** 2 == pytest.approx(25.0, abs=1e-12)


def test_collide_preserves_norm_and_inverts():
    s = RngStream(21)
    v = s.normal((10_000, 2)) * 3
    theta = s.uniform(0.0, TWO_PI, 10_000)
    for (vi, vj), th in zip(v, theta):
        a, b = collide(vi, vj, th)
        assert abs(a * a + b * b - (vi * vi + vj * vj)) <= 1e-12 * max(1.0, vi * vi + vj * vj)
        x, y = collide(a, b, -th)
        assert x == pytest.approx(vi, abs=1e-12)
        assert y == pytest.approx(vj, abs=1e-12)


def test_ensemble_needs_two_particles():
    with pytest.raises(ValueError):
        Ensemble(np.array([1.0]))
    with pytest.raises(ValueError):
        initial_ensemble(1, RngStream(0))


def test_total_energy():
    assert total_energy(Ensemble(np.array([3.0, 4.0]))) == 25.0
    assert total_energy(Ensemble(np.zeros(5))) == 0.0
    e = initial_ensemble(10_000, RngStream(22))
    assert total_energy(e) == pytest.approx(1.5 * 10_000, rel=0.05)


def test_kac_walk_step_two_particles_matches_collide():
    before = np.array([0.3, -1.1])
    e = Ensemble(before.copy())
    kac_walk_step(e, RngStream(23))
    replay = RngStream(23)
    i, j = replay.random_pair(2)
    theta = replay.uniform(0.0, TWO_PI)
    assert (i, j) == (0, 1)
    assert tuple(e.velocities) == collide(before[0], before[1], theta)


def test_kac_walk_step_changes_at_most_two_coordinates():
    s = RngStream(24)
    e = initial_ensemble(10, s)
    for _ in range(100):
        before = e.velocities.copy()
        kac_walk_step(e, s)
        assert np.count_nonzero(before != e.velocities) <= 2


def test_kac_walk_conserves_energy():
    s = RngStream(25)
    e = initial_ensemble(10, s)
    energy = total_energy(e)
    kac_walk(e, 100_000, s)
    assert total_energy(e) == pytest.approx(energy, rel=1e-12)


def test_rotate_sequence_matches_collide_loop():
    s = RngStream(26)
    e = initial_ensemble(6, s)
    first, second = s.random_pairs(6, 50)
    theta = s.uniform(0.0, TWO_PI, 50)
    expected = e.velocities.copy()
    for i, j, th in zip(first, second, theta):
        expected[i], expected[j] = collide(expected[i], expected[j], th)
    rotate_sequence(e, first, second, theta)
    assert np.allclose(e.velocities, expected, rtol=0, atol=1e-13)


def test_kac_walk_equilibrates_to_gaussian():
    s = RngStream(27)
    e = initial_ensemble(1000, s)
    kac_walk(e, 1_000_000, s)
    snapshots = [e.velocities.copy()]
    for _ in range(199):
        kac_walk(e, 10_000, s)
        snapshots.append(e.velocities.copy())
    h = build_histogram(np.concatenate(snapshots), -5.0, 5.0, 0.1)
    assert tvn_vs_density(h, limit_density) <= 0.02

"""
Finite-time samplers of the particle-1 marginal f_N(v, t).

Each sampler draws N iid initial velocities from f0, propagates the ensemble
to ``cfg.t_final`` and returns the final ensemble with collision telemetry.
Indices are 0-based: "particle 1" is index 0.
"""

import math
import logging
from dataclasses import dataclass

import numpy as np

from .collision import TWO_PI, Ensemble, collide, initial_ensemble, rotate_sequence
from .schemas import Algorithm, SimConfig, time_steps
from .settings import BIRD_CLOCK_RTOL, TELEMETRY_SUBSTREAM

logger = logging.getLogger("kacsim")


@dataclass
class RunResult:
    final_velocities: Ensemble
    v1: float
    collisions_processed: int
    collisions_saved: int = 0


def _result(ensemble, processed, saved=0):
    return RunResult(
        final_velocities=ensemble,
        v1=float(ensemble.velocities[0]),
        collisions_processed=int(processed),
        collisions_saved=int(saved),
    )


def round_probabilistic(x: float, stream) -> int:
    """floor(x) + 1 with probability x - floor(x), else floor(x); unbiased."""
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"probabilistic rounding needs a finite x >= 0, got {x}")
    base = math.floor(x)
    return base + int(stream.bernoulli(x - base))


def _stepped_schedule(cfg: SimConfig) -> int:
    if cfg.dt is None:
        raise ValueError(f"{cfg.algorithm.value} requires a time step dt")
    if cfg.lam * cfg.dt > 1.0 + 1e-12:
        raise ValueError(f"lambda*dt must not exceed 1, got {cfg.lam * cfg.dt:.6g}")
    return time_steps(cfg.t_final, cfg.dt)


def run_nanbu(cfg: SimConfig, stream) -> RunResult:
    """
    Nanbu's scheme. Each step every particle independently collides with
    probability lambda*dt against a uniform partner; only the particle itself
    is updated, so energy is not conserved.
    """
    steps = _stepped_schedule(cfg)
    ensemble = initial_ensemble(cfg.n_particles, stream)
    v = ensemble.velocities
    n = cfg.n_particles
    p = cfg.lam * cfg.dt
    processed = 0
    for _ in range(steps):
        hit = np.flatnonzero(stream.bernoulli(p, n))
        if hit.size == 0:
            continue
        partner = stream.integers(0, n - 1, hit.size)
        partner = partner + (partner >= hit)
        theta = stream.uniform(0.0, TWO_PI, hit.size)
        # both operands are read from the step-start state before any write
        snapshot = v.copy()
        v[hit] = snapshot[hit] * np.cos(theta) + snapshot[partner] * np.sin(theta)
        processed += hit.size
    return _result(ensemble, processed)


def run_nanbu_babovsky(cfg: SimConfig, stream) -> RunResult:
    """
    Nanbu-Babovsky scheme: Round[lambda*N*dt/2] disjoint pairs per step, each
    rotated by a fresh angle. One round of pairs per step.
    """
    steps = _stepped_schedule(cfg)
    ensemble = initial_ensemble(cfg.n_particles, stream)
    v = ensemble.velocities
    n = cfg.n_particles
    mean_pairs = cfg.lam * n * cfg.dt / 2
    processed = 0
    for _ in range(steps):
        m = round_probabilistic(mean_pairs, stream)
        if m > n // 2:
            raise ValueError(f"rounded pair count {m} exceeds floor(N/2) = {n // 2}")
        if m == 0:
            continue
        pairs = stream.random_disjoint_pairs(n, m)
        theta = stream.uniform(0.0, TWO_PI, m)
        a, b = pairs[:, 0], pairs[:, 1]
        va, vb = v[a], v[b]
        c, s = np.cos(theta), np.sin(theta)
        v[a] = va * c + vb * s
        v[b] = -va * s + vb * c
        processed += m
    return _result(ensemble, processed)


def bird_collision_count(n: int, lam: float, t: float) -> int:
    """
    Collisions processed by Bird's scheme: the clock advances by
    dt_c = 2/(lambda N) and a collision counts only if the advanced clock is
    still <= t, giving floor(t / dt_c).
    """
    return int(math.floor(t * lam * n / 2 * (1.0 + BIRD_CLOCK_RTOL)))


def run_bird_dsmc(cfg: SimConfig, stream) -> RunResult:
    """Bird's DSMC: uniform pairs with replacement at a fixed mean collision spacing."""
    ensemble = initial_ensemble(cfg.n_particles, stream)
    count = bird_collision_count(cfg.n_particles, cfg.lam, cfg.t_final)
    if count:
        first, second = stream.random_pairs(cfg.n_particles, count)
        theta = stream.uniform(0.0, TWO_PI, count)
        rotate_sequence(ensemble, first, second, theta)
    return _result(ensemble, count)


def run_exact_poisson(cfg: SimConfig, stream) -> RunResult:
    """
    Exact Poisson scheme built on the particle-1 collision process.

    Particle 1 collides at the K ~ Poisson(lambda t) sorted uniform times in
    (0, t). Between consecutive times the other N-1 particles undergo a
    Poisson(lambda (N-1) gap / 2) number of collisions among themselves, then
    particle 1 collides with a uniform partner. Nothing is simulated after
    the last particle-1 collision; ``collisions_saved`` is the realised
    number of ensemble collisions (rate lambda N / 2) in that skipped tail,
    drawn from a telemetry sub-stream.
    The tail rate is lambda N / 2 rather than lambda (N-1) / 2 so the mean
    equals the savings formula in ``expected_savings``.
    """
    n = cfg.n_particles
    lam = cfg.lam
    t = cfg.t_final
    ensemble = initial_ensemble(n, stream)
    v = ensemble.velocities

    k = stream.poisson(lam * t)
    times = np.sort(stream.uniform(0.0, t, k), kind="stable") if k else ()

    processed = 0
    previous = 0.0
    for arrival in times:
        # with N = 2 the sub-ensemble has no pairs
        if n > 2:
            background = stream.poisson(lam * (n - 1) * (arrival - previous) / 2)
            if background:
                first, second = stream.random_pairs(n - 1, background)
                theta = stream.uniform(0.0, TWO_PI, background)
                rotate_sequence(ensemble, first + 1, second + 1, theta)
                processed += background
        r = 1 + int(stream.integers(0, n - 1))
        theta = stream.uniform(0.0, TWO_PI)
        v[0], v[r] = collide(v[0], v[r], theta)
        processed += 1
        previous = float(arrival)

    tail = t - previous
    saved = stream.substream(TELEMETRY_SUBSTREAM).poisson(lam * n * tail / 2)
    return _result(ensemble, processed, saved)


def expected_savings(n: int, lam: float, t: float) -> float:
    """Expected collisions skipped per run by the exact Poisson scheme: (N/2)(1 - exp(-lambda t))."""
    if n < 2 or not lam > 0 or not t >= 0:
        raise ValueError(f"expected_savings needs N >= 2, lambda > 0, t >= 0, got {n}, {lam}, {t}")
    return n / 2 * (1.0 - math.exp(-lam * t))


RUNNERS = {
    Algorithm.nanbu: run_nanbu,
    Algorithm.nanbu_babovsky: run_nanbu_babovsky,
    Algorithm.bird: run_bird_dsmc,
    Algorithm.poisson: run_exact_poisson,
}


def run(cfg: SimConfig, stream) -> RunResult:
    return RUNNERS[cfg.algorithm](cfg, stream)

"""
Experiment orchestration for the ``density``, ``sample``, ``compare`` and
``perfect`` commands.

Replicate r of a run always draws from ``RngStream(seed, r)`` whatever
worker executes it; repeat j of a compare cell shifts this to stream
``j * replicates + r``. Replicates are split into contiguous chunks, one
per worker, and the chunk results are concatenated in chunk order, so a
parallel run reproduces the serial one exactly.
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import stats

from . import __version__
from .algorithms import expected_savings, run
from .analytic import DensityCurve, density_curve, sample_exact
from .metrics import Histogram, histogram_of, histogram_rows, tail_table, tvn_vs_density
from .perfect import cftp_sample, default_energy, harvest
from .rng import RngStream
from .schemas import (
    ORACLE,
    Algorithm,
    ExperimentSpec,
    OracleUnavailableError,
    SimConfig,
    oracle_applies,
)
from .settings import COARSE_EPSILON_FACTOR

logger = logging.getLogger("kacsim")


@dataclass
class ReplicateBatch:
    v1: np.ndarray
    collisions_processed: int = 0
    collisions_saved: int = 0


@dataclass
class SampleReport:
    histogram: Histogram
    rows: list
    summary: dict
    tail_rows: Optional[list] = None


@dataclass
class PerfectReport:
    histogram: Histogram
    rows: list
    summary: dict
    draws: List[dict] = field(default_factory=list)


# -- worker pool -----------------------------------------------------------

def replicate_chunks(replicates: int, workers: int):
    """Split 0..replicates-1 into at most ``workers`` contiguous [start, stop) ranges."""
    if replicates < 1 or workers < 1:
        raise ValueError(f"need replicates >= 1 and workers >= 1, got {replicates}, {workers}")
    size = math.ceil(replicates / workers)
    return [(start, min(start + size, replicates)) for start in range(0, replicates, size)]


def _map_chunks(fn, tasks, workers):
    if workers == 1 or len(tasks) == 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _run_chunk(task):
    cfg, t, seed, first, last = task
    v1 = np.empty(last - first)
    processed = saved = 0
    for i, stream_id in enumerate(range(first, last)):
        stream = RngStream(seed, stream_id)
        if cfg is None:
            v1[i] = sample_exact(t, stream)
            continue
        result = run(cfg, stream)
        v1[i] = result.v1
        processed += result.collisions_processed
        saved += result.collisions_saved
    return ReplicateBatch(v1, processed, saved)


def sample_v1(cfg: Optional[SimConfig], t: float, seed: int, replicates: int,
              workers: int = 1, offset: int = 0) -> ReplicateBatch:
    """
    Run ``replicates`` independent replicates and collect particle 1's
    velocity from each, in replicate order.

    Args:
        cfg (SimConfig): Sampler configuration, or None to draw directly from
            the exact solution at time ``t``.
        t (float): Sampling time.
        seed (int): Experiment seed.
        replicates (int): Number of replicates.
        workers (int): Worker processes.
        offset (int): First stream id.
    """
    tasks = [
        (cfg, t, seed, offset + start, offset + stop)
        for start, stop in replicate_chunks(replicates, workers)
    ]
    batches = _map_chunks(_run_chunk, tasks, workers)
    return ReplicateBatch(
        np.concatenate([b.v1 for b in batches]),
        sum(b.collisions_processed for b in batches),
        sum(b.collisions_saved for b in batches),
    )


# -- shared helpers --------------------------------------------------------

def _base_summary(spec: ExperimentSpec) -> dict:
    return {
        "version": __version__,
        "command": spec.command,
        "spec": spec.summary(),
        "seed": spec.seed,
        "bins": spec.bins.label(),
    }


def _target_curve(spec: ExperimentSpec) -> Optional[DensityCurve]:
    if not oracle_applies(spec.lam):
        return None
    return density_curve("exact", spec.t_final)


def _require_oracle(spec: ExperimentSpec, purpose: str):
    if not oracle_applies(spec.lam):
        raise OracleUnavailableError(
            f"{purpose} needs the Krook-Wu solution, which requires lambda = sqrt(pi)/2, got {spec.lam}"
        )


def _cell_config(spec: ExperimentSpec, cell) -> Optional[SimConfig]:
    return None if cell.algorithm == ORACLE else spec.sim_config(cell)


def _tvn(histogram: Histogram, curve: Optional[DensityCurve]) -> Optional[float]:
    if curve is None:
        return None
    if histogram.in_range == 0:
        logger.warning("no samples fell inside the bins, TVN is undefined")
        return None
    return tvn_vs_density(histogram, curve)


# -- commands --------------------------------------------------------------

def density_rows(spec: ExperimentSpec) -> List[dict]:
    """Evaluate the requested curve at every grid point lo, lo + step, ..., hi."""
    t = spec.t_final if spec.curve == "exact" else None
    curve = density_curve(spec.curve, t)
    grid = spec.grid.edges
    values = curve(grid)
    return [{"v": float(v), "density": float(f)} for v, f in zip(grid, values)]


def run_sample(spec: ExperimentSpec) -> SampleReport:
    """Histogram of particle 1's velocity over independent replicates of one cell."""
    cell = spec.cells()[0]
    if cell.algorithm == ORACLE:
        _require_oracle(spec, "the oracle sampler")
    if spec.tail_from is not None:
        _require_oracle(spec, "the tail table")

    cfg = _cell_config(spec, cell)
    logger.info(f"Sampling {spec.replicates} replicates of {cell.algorithm} with N={cell.n_particles}")
    batch = sample_v1(cfg, spec.t_final, spec.seed, spec.replicates, spec.workers)
    histogram = histogram_of(batch.v1, spec.bins)

    curve = _target_curve(spec)
    if curve is None:
        logger.warning(f"lambda = {spec.lam} is not sqrt(pi)/2, no TVN against the exact solution")
    tvn = _tvn(histogram, curve)

    summary = _base_summary(spec)
    summary.update({
        "algorithm": cell.algorithm,
        "n_particles": cell.n_particles,
        "lambda": spec.lam,
        "t": spec.t_final,
        "dt": cell.dt,
        "n_samples": histogram.total,
        "underflow": histogram.underflow,
        "overflow": histogram.overflow,
        "tvn": tvn,
        "target": curve.label if curve else None,
        "sample_mean": float(batch.v1.mean()),
        "sample_variance": float(batch.v1.var(ddof=1)) if batch.v1.size > 1 else None,
    })
    if cfg is not None:
        summary["mean_collisions_processed"] = batch.collisions_processed / spec.replicates
    if cfg is not None and cfg.algorithm is Algorithm.poisson:
        summary["mean_collisions_saved"] = batch.collisions_saved / spec.replicates
        summary["expected_savings"] = expected_savings(cfg.n_particles, cfg.lam, cfg.t_final)

    tail_rows = None
    if spec.tail_from is not None:
        tail_rows = tail_table(histogram, curve, spec.tail_from)

    return SampleReport(histogram, histogram_rows(histogram, curve), summary, tail_rows)


def run_compare(spec: ExperimentSpec):
    """
    Mean and standard deviation of ``tvn_repeats`` independent TVN estimates
    for every (algorithm, N, dt) cell.

    Returns:
        tuple: (rows, summary); one row per cell.
    """
    curve = _target_curve(spec)
    if curve is None:
        _require_oracle(spec, "compare")

    rows = []
    for cell in spec.cells():
        cfg = _cell_config(spec, cell)
        tvns = []
        for repeat in range(spec.tvn_repeats):
            batch = sample_v1(cfg, spec.t_final, spec.seed, spec.replicates, spec.workers,
                              offset=repeat * spec.replicates)
            tvns.append(tvn_vs_density(histogram_of(batch.v1, spec.bins), curve))
        tvns = np.array(tvns)
        row = {
            "algorithm": cell.algorithm,
            "N": cell.n_particles,
            "dt": cell.dt,
            "mean_tvn": float(tvns.mean()),
            "sd_tvn": float(tvns.std(ddof=1)) if tvns.size > 1 else None,
            "tvn_repeats": spec.tvn_repeats,
        }
        logger.info(f"{cell.algorithm} N={cell.n_particles} dt={cell.dt}: mean TVN {row['mean_tvn']:.5f}")
        rows.append(row)

    summary = _base_summary(spec)
    summary.update({
        "lambda": spec.lam,
        "t": spec.t_final,
        "replicates": spec.replicates,
        "tvn_repeats": spec.tvn_repeats,
        "target": curve.label,
        "cells": rows,
    })
    return rows, summary


def stationary_curve(n: int, energy: float) -> DensityCurve:
    """Gaussian limit of one coordinate on the sphere of energy E: variance E/N."""
    if math.isclose(energy, default_energy(n)):
        return density_curve("limit")
    scale = math.sqrt(energy / n)
    return DensityCurve(lambda v: stats.norm.pdf(v, scale=scale), f"N(0,{energy / n:g})")


def _run_perfect_chunk(task):
    n, energy, epsilon, step_back, seed, start, stop = task
    return [
        cftp_sample(n, energy, epsilon, RngStream(seed, r), step_back)
        for r in range(start, stop)
    ]


def run_perfect(spec: ExperimentSpec) -> PerfectReport:
    """Histogram of epsilon-perfect coordinate samples and coupling-time statistics."""
    n = spec.n_particles[0]
    energy = spec.energy if spec.energy is not None else default_energy(n)
    coarse = spec.epsilon >= COARSE_EPSILON_FACTOR * math.sqrt(energy / n)
    if coarse:
        logger.warning(
            f"epsilon = {spec.epsilon} is coarse against the coordinate scale "
            f"sqrt(E/N) = {math.sqrt(energy / n):.4g}, draws sit near the corner average"
        )

    tasks = [
        (n, energy, spec.epsilon, spec.step_back, spec.seed, start, stop)
        for start, stop in replicate_chunks(spec.replicates, spec.workers)
    ]
    draws = [d for chunk in _map_chunks(_run_perfect_chunk, tasks, spec.workers) for d in chunk]

    samples = np.concatenate([harvest(d, spec.harvest_all) for d in draws])
    histogram = histogram_of(samples, spec.bins)
    curve = stationary_curve(n, energy)
    times = np.array([d.coupling_time for d in draws])

    summary = _base_summary(spec)
    summary.update({
        "n_particles": n,
        "energy": energy,
        "epsilon": spec.epsilon,
        "step_back": spec.step_back,
        "harvest_all": spec.harvest_all,
        "coarse_epsilon": coarse,
        "n_draws": len(draws),
        "n_samples": histogram.total,
        "underflow": histogram.underflow,
        "overflow": histogram.overflow,
        "tvn": _tvn(histogram, curve),
        "target": curve.label,
        "sample_variance": float(samples.var(ddof=1)) if samples.size > 1 else None,
        "coupling_time_mean": float(times.mean()),
        "coupling_time_min": int(times.min()),
        "coupling_time_max": int(times.max()),
        "final_diameter_max": float(max(d.final_diameter for d in draws)),
    })
    draw_rows = [
        {
            "replicate": r,
            "v1": float(d.velocity_vector[0]),
            "coupling_time": d.coupling_time,
            "final_diameter": d.final_diameter,
        }
        for r, d in enumerate(draws)
    ]
    return PerfectReport(histogram, histogram_rows(histogram, curve), summary, draw_rows)

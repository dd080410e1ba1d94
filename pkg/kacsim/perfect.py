"""
Epsilon-perfect coupling from the past for the stationary Kac marginal.

The walk is run on the first octant of the energy sphere with the sine-form
update: for a pair (a, b) and angle theta in [0, pi/2) every point moves to
c(a) = sqrt(e) sin(theta), c(b) = sqrt(e - c(a)^2) with e = c(a)^2 + c(b)^2.
The update is 1-Lipschitz, so the N corner points sqrt(E) e_i bound every
trajectory; once they are within epsilon of each other at time 0 their mean
is returned with an independent random sign on each coordinate.
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numba as nb
import numpy as np
from scipy.spatial.distance import pdist

from .settings import ENERGY_PER_PARTICLE, MAX_LOG2_COUPLING_TIME, SIGN_SUBSTREAM

logger = logging.getLogger("kacsim")

HALF_PI = math.pi / 2
STEP_BACK_SCHEDULES = ("doubling", "linear")


class CouplingDidNotConverge(RuntimeError):
    pass


@dataclass
class CornerState:
    """Row i of ``corners`` is corner point i; every row lies on the sphere of radius sqrt(energy)."""
    corners: np.ndarray
    energy: float

    @property
    def n_particles(self) -> int:
        return self.corners.shape[0]


@dataclass(frozen=True)
class UpdateRecord:
    theta: float
    pair: Tuple[int, int]

    def __post_init__(self):
        if not 0.0 <= self.theta < HALF_PI:
            raise ValueError(f"theta must lie in [0, pi/2), got {self.theta}")
        if self.pair[0] == self.pair[1]:
            raise ValueError(f"update pair must be two distinct indices, got {self.pair}")


@dataclass
class PerfectDraw:
    velocity_vector: np.ndarray
    coupling_time: int
    final_diameter: float


def default_energy(n: int) -> float:
    """E = 1.5 N, matching the variance 3/2 of the limit marginal."""
    return ENERGY_PER_PARTICLE * n


def fresh_corners(n: int, energy: float) -> CornerState:
    return CornerState(math.sqrt(energy) * np.eye(n), float(energy))


@nb.njit(cache=True)
def _apply_updates(corners, theta, first, second):
    n = corners.shape[0]
    for k in range(theta.shape[0]):
        a = first[k]
        b = second[k]
        s = math.sin(theta[k])
        for i in range(n):
            e = corners[i, a] * corners[i, a] + corners[i, b] * corners[i, b]
            ca = math.sqrt(e) * s
            corners[i, a] = ca
            rest = e - ca * ca
            corners[i, b] = math.sqrt(rest) if rest > 0.0 else 0.0


def apply_update(state: CornerState, record: UpdateRecord) -> CornerState:
    """Apply one update to every corner, in place."""
    _apply_updates(
        state.corners,
        np.array([record.theta]),
        np.array([record.pair[0]], dtype=np.int64),
        np.array([record.pair[1]], dtype=np.int64),
    )
    return state


def max_pairwise_distance(state: CornerState) -> float:
    return float(pdist(state.corners).max())


def coordinate_spread(state: CornerState) -> float:
    """Largest per-coordinate spread across corners; a lower bound on the diameter."""
    c = state.corners
    return float((c.max(axis=0) - c.min(axis=0)).max())


class UpdateHistory:
    """
    Append-only store of update records. Entry k holds the record for time
    -(k+1); entries are drawn once and reused on every later attempt.
    """

    def __init__(self, n: int, stream):
        self.n = n
        self.stream = stream
        self.theta = np.empty(0)
        self.first = np.empty(0, dtype=np.int64)
        self.second = np.empty(0, dtype=np.int64)

    def __len__(self):
        return self.theta.size

    def extend_to(self, depth: int):
        extra = depth - len(self)
        if extra <= 0:
            return
        theta = self.stream.uniform(0.0, HALF_PI, extra)
        first, second = self.stream.random_pairs(self.n, extra, ordered=True)
        self.theta = np.concatenate([self.theta, theta])
        self.first = np.concatenate([self.first, first.astype(np.int64)])
        self.second = np.concatenate([self.second, second.astype(np.int64)])

    def record(self, time: int) -> UpdateRecord:
        """Record stored for time -``time`` (``time`` >= 1)."""
        k = time - 1
        return UpdateRecord(float(self.theta[k]), (int(self.first[k]), int(self.second[k])))

    def replay(self, state: CornerState, depth: int) -> CornerState:
        """Apply the records from time -depth up to time -1, oldest first."""
        _apply_updates(
            state.corners,
            np.ascontiguousarray(self.theta[:depth][::-1]),
            np.ascontiguousarray(self.first[:depth][::-1]),
            np.ascontiguousarray(self.second[:depth][::-1]),
        )
        return state


def trace_diameters(state: CornerState, history: UpdateHistory, depth: int):
    """Replay step by step, returning the diameter after every update (test and debug use)."""
    diameters = [max_pairwise_distance(state)]
    for time in range(depth, 0, -1):
        apply_update(state, history.record(time))
        diameters.append(max_pairwise_distance(state))
    return np.array(diameters)


def _check_invariants(state: CornerState, history: UpdateHistory, depth: int):
    diameters = trace_diameters(state, history, depth)
    if np.any(np.diff(diameters) > 1e-12 * math.sqrt(state.energy)):
        raise AssertionError("corner diameter increased along the update sequence")
    norms = np.einsum("ij,ij->i", state.corners, state.corners)
    if not np.allclose(norms, state.energy, rtol=1e-9, atol=0.0):
        raise AssertionError("a corner point left the energy sphere")
    if np.any(state.corners < 0):
        raise AssertionError("a corner point left the first octant")


def _depth(attempt: int, step_back: str) -> int:
    return 2 ** attempt if step_back == "doubling" else attempt + 1


def cftp_sample(n: int, energy: float, epsilon: float, stream,
                step_back: str = "doubling", check_invariants: bool = False) -> PerfectDraw:
    """
    Draw one epsilon-perfect sample of the stationary velocity vector.

    Args:
        n (int): Number of particles, at least 2.
        energy (float): Sphere energy E, see ``default_energy``.
        epsilon (float): Coalescence tolerance on the corner diameter.
        stream (RngStream): Source of the update history. Signs come from a
            dedicated sub-stream so coupling times do not depend on them.
        step_back (str): ``doubling`` (T = 1, 2, 4, ...) or ``linear``
            (T = 1, 2, 3, ..., giving the exact backward coupling time).
        check_invariants (bool): Replay each attempt step by step and assert
            the contraction, sphere and octant invariants.

    Raises:
        CouplingDidNotConverge: if T would exceed 2**30.
    """
    if n < 2:
        raise ValueError(f"CFTP needs N >= 2, got {n}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not energy > 0:
        raise ValueError(f"energy must be positive, got {energy}")
    if step_back not in STEP_BACK_SCHEDULES:
        raise ValueError(f"step_back must be one of {STEP_BACK_SCHEDULES}, got '{step_back}'")

    history = UpdateHistory(n, stream)
    attempt = 0
    while True:
        depth = _depth(attempt, step_back)
        if depth > 2 ** MAX_LOG2_COUPLING_TIME:
            raise CouplingDidNotConverge(f"no epsilon-coalescence by T = {2 ** MAX_LOG2_COUPLING_TIME}")
        history.extend_to(depth)
        state = fresh_corners(n, energy)
        if check_invariants:
            _check_invariants(state, history, depth)
        else:
            history.replay(state, depth)
        if coordinate_spread(state) < epsilon:
            diameter = max_pairwise_distance(state)
            if diameter < epsilon:
                break
        attempt += 1

    signs = np.where(stream.substream(SIGN_SUBSTREAM).bernoulli(0.5, n), 1.0, -1.0)
    return PerfectDraw(state.corners.mean(axis=0) * signs, depth, diameter)


def coordinate_sample(draw: PerfectDraw) -> float:
    """Velocity of particle 1 from a perfect draw."""
    return float(draw.velocity_vector[0])


def harvest(draw: PerfectDraw, all_coordinates: bool = False) -> np.ndarray:
    """Coordinate 1, or all N coordinates (mutually dependent) when asked."""
    if all_coordinates:
        return draw.velocity_vector.copy()
    return draw.velocity_vector[:1].copy()

"""
The Kac walk primitive: ensemble state, the two-particle rotation and energy
accounting shared by every sampler.
"""

import math
import logging
from dataclasses import dataclass

import numba as nb
import numpy as np

from .analytic import sample_initial

logger = logging.getLogger("kacsim")

TWO_PI = 2.0 * math.pi


@dataclass
class Ensemble:
    """N particle velocities stored as one contiguous float64 array."""
    velocities: np.ndarray

    def __post_init__(self):
        self.velocities = np.ascontiguousarray(self.velocities, dtype=np.float64)
        if self.velocities.ndim != 1 or self.velocities.size < 2:
            raise ValueError("an ensemble needs a flat vector of at least 2 velocities")

    @property
    def n_particles(self) -> int:
        return self.velocities.size

    def copy(self) -> "Ensemble":
        return Ensemble(self.velocities.copy())


def initial_ensemble(n: int, stream) -> Ensemble:
    """N iid draws from f0."""
    if n < 2:
        raise ValueError(f"an ensemble needs N >= 2, got {n}")
    return Ensemble(sample_initial(stream, n))


def total_energy(ensemble: Ensemble) -> float:
    return float(np.dot(ensemble.velocities, ensemble.velocities))


def collide(vi: float, vj: float, theta: float):
    """Rotate the pair (vi, vj) by theta; both outputs use the pre-collision pair."""
    c = math.cos(theta)
    s = math.sin(theta)
    return vi * c + vj * s, -vi * s + vj * c


@nb.njit(cache=True)
def _rotate_sequence(v, first, second, theta):
    for k in range(theta.shape[0]):
        i = first[k]
        j = second[k]
        c = math.cos(theta[k])
        s = math.sin(theta[k])
        vi = v[i]
        vj = v[j]
        v[i] = vi * c + vj * s
        v[j] = -vi * s + vj * c


def rotate_sequence(ensemble: Ensemble, first, second, theta) -> Ensemble:
    """Apply a batch of collisions in order, in place."""
    _rotate_sequence(
        ensemble.velocities,
        np.ascontiguousarray(first, dtype=np.int64),
        np.ascontiguousarray(second, dtype=np.int64),
        np.ascontiguousarray(theta, dtype=np.float64),
    )
    return ensemble


def kac_walk_step(ensemble: Ensemble, stream) -> Ensemble:
    """One Kac walk step: a uniform unordered pair rotated by theta ~ unif(0, 2pi), in place."""
    i, j = stream.random_pair(ensemble.n_particles)
    theta = stream.uniform(0.0, TWO_PI)
    v = ensemble.velocities
    v[i], v[j] = collide(v[i], v[j], theta)
    return ensemble


def kac_walk(ensemble: Ensemble, steps: int, stream) -> Ensemble:
    """``steps`` chained Kac walk steps with the schedule drawn up front."""
    first, second = stream.random_pairs(ensemble.n_particles, steps)
    theta = stream.uniform(0.0, TWO_PI, steps)
    return rotate_sequence(ensemble, first, second, theta)

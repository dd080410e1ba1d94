"""
Deterministic random streams for the Kac samplers.

Every stream is keyed by ``(seed, stream_id)`` and backed by numpy's
counter-based Philox generator, seeded through a ``SeedSequence`` whose spawn
key carries the stream id. Replicate ``r`` of an experiment always uses
``stream_id = r``, so results do not depend on how replicates are scheduled
across workers.
"""

import math
import logging
from typing import Tuple

import numpy as np

logger = logging.getLogger("kacsim")


def _check_real(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


class RngStream:
    """
    A seedable, splittable random source.

    Args:
        seed (int): Non-negative experiment seed.
        stream_id (int): Non-negative stream index (replicate number).
        path (tuple, optional): Sub-stream indices below ``stream_id``. Use
            ``substream()`` rather than passing this directly.
    """

    def __init__(self, seed: int, stream_id: int = 0, path: Tuple[int, ...] = ()):
        if seed < 0 or stream_id < 0 or any(p < 0 for p in path):
            raise ValueError("seed, stream_id and sub-stream indices must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(p) for p in path)
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self.path)
        )
        self._gen = np.random.Generator(np.random.Philox(sequence))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"

    def substream(self, index: int) -> "RngStream":
        """Child stream that never overlaps with this one or its siblings."""
        return RngStream(self.seed, self.stream_id, self.path + (index,))

    # -- continuous draws --------------------------------------------------

    def uniform(self, lo: float, hi: float, size=None):
        """Uniform draw(s) on ``[lo, hi)``."""
        _check_real("lo", lo)
        _check_real("hi", hi)
        if not lo < hi:
            raise ValueError(f"uniform bounds must satisfy lo < hi, got lo={lo}, hi={hi}")
        return self._gen.uniform(lo, hi, size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def exponential(self, size=None):
        return self._gen.standard_exponential(size)

    def gamma(self, shape: float, size=None):
        """Gamma draw(s) with the given shape and unit rate."""
        if not shape > 0:
            raise ValueError(f"gamma shape must be positive, got {shape}")
        return self._gen.standard_gamma(shape, size)

    # -- discrete draws ----------------------------------------------------

    def poisson(self, mean: float, size=None):
        """
        Poisson count(s) with the given mean.

        numpy samples small means by sequential search and large means by
        transformed rejection (PTRS), which covers both the O(1) particle-1
        counts and the O(N t) background counts.
        """
        _check_real("mean", mean)
        if mean < 0:
            raise ValueError(f"Poisson mean must be non-negative, got {mean}")
        if size is None:
            return int(self._gen.poisson(mean))
        return self._gen.poisson(mean, size)

    def bernoulli(self, p: float, size=None):
        """True with probability ``p``."""
        _check_real("p", p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"Bernoulli probability must lie in [0, 1], got {p}")
        draws = self._gen.random(size) < p
        return bool(draws) if size is None else draws

    def integers(self, lo: int, hi: int, size=None):
        """Integer draw(s) uniform on ``{lo, ..., hi - 1}``."""
        return self._gen.integers(lo, hi, size)

    def random_pairs(self, n: int, size: int, ordered: bool = False):
        """
        Vectorised ``random_pair``: two index arrays of length ``size``.

        Each ordered pair of distinct indices in ``{0, ..., n-1}`` is equally
        likely; unordered pairs are returned with ``first < second``.
        """
        if n < 2:
            raise ValueError(f"random pairs need n >= 2, got n={n}")
        first = self._gen.integers(0, n, size)
        second = self._gen.integers(0, n - 1, size)
        second = second + (second >= first)
        if ordered:
            return first, second
        return np.minimum(first, second), np.maximum(first, second)

    def random_pair(self, n: int, ordered: bool = False) -> Tuple[int, int]:
        first, second = self.random_pairs(n, 1, ordered)
        return int(first[0]), int(second[0])

    def random_disjoint_pairs(self, n: int, m: int) -> np.ndarray:
        """
        ``m`` pairs of particle indices with no index repeated, as an
        ``(m, 2)`` array. The 2m indices are a uniform draw without
        replacement, so pairing consecutive entries is uniform over matchings.
        """
        if m < 0:
            raise ValueError(f"pair count must be non-negative, got m={m}")
        if 2 * m > n:
            raise ValueError(f"cannot draw {m} disjoint pairs from {n} particles (2m > n)")
        chosen = self._gen.choice(n, size=2 * m, replace=False, shuffle=True)
        return chosen.reshape(m, 2)

"""
Histograms and discrete total variation distance.

Samples are binned on a fixed geometry (canonically [-5, 5) in steps of 0.1)
and compared with a density through the bin masses of that density, both
normalised over the in-range bins, using TVN = 0.5 * sum |p - q|.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import stats

from .schemas import BinGeometry
from .settings import GAUSS_LEGENDRE_POINTS

logger = logging.getLogger("kacsim")

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_LEGENDRE_POINTS)


@dataclass
class Histogram:
    geometry: BinGeometry
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    @property
    def lo(self) -> float:
        return self.geometry.lo

    @property
    def hi(self) -> float:
        return self.geometry.hi

    @property
    def bin_width(self) -> float:
        return self.geometry.width

    @property
    def in_range(self) -> int:
        return int(self.counts.sum())

    @property
    def total(self) -> int:
        return self.in_range + self.underflow + self.overflow

    def probabilities(self) -> np.ndarray:
        """Bin probabilities of the in-range mass."""
        if self.in_range == 0:
            raise ValueError("histogram has no in-range samples")
        return self.counts / self.in_range


def empty_histogram(geometry: BinGeometry) -> Histogram:
    return Histogram(geometry, np.zeros(geometry.n_bins, dtype=np.int64))


def histogram_of(samples, geometry: BinGeometry) -> Histogram:
    """Bin samples left-closed: bin b holds lo + b*width <= x < lo + (b+1)*width."""
    x = np.asarray(samples, dtype=float).ravel()
    if np.isnan(x).any():
        raise ValueError("cannot bin NaN samples")
    edges = geometry.edges
    index = np.searchsorted(edges, x, side="right") - 1
    underflow = int(np.count_nonzero(index < 0))
    overflow = int(np.count_nonzero(index >= geometry.n_bins))
    inside = index[(index >= 0) & (index < geometry.n_bins)]
    counts = np.bincount(inside, minlength=geometry.n_bins).astype(np.int64)
    return Histogram(geometry, counts, underflow, overflow)


def build_histogram(samples, lo: float, hi: float, width: float) -> Histogram:
    return histogram_of(samples, BinGeometry(lo=lo, hi=hi, width=width))


def merge(a: Histogram, b: Histogram) -> Histogram:
    """Bin-wise sum of two histograms on the same geometry."""
    if a.geometry != b.geometry:
        raise ValueError(
            f"cannot merge histograms on different bins: {a.geometry.label()} vs {b.geometry.label()}"
        )
    return Histogram(a.geometry, a.counts + b.counts, a.underflow + b.underflow, a.overflow + b.overflow)


def tvn_discrete(p, q) -> float:
    """0.5 * sum |p - q| for two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"probability vectors differ in length: {p.shape} vs {q.shape}")
    for name, vec in (("p", p), ("q", q)):
        if np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability vector (sum = {vec.sum():.12g})")
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def bin_masses(geometry: BinGeometry, density) -> np.ndarray:
    """Mass of the density in every bin by Gauss-Legendre quadrature, not renormalised."""
    edges = geometry.edges
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    points = mid[:, None] + half[:, None] * _NODES[None, :]
    values = np.asarray(density(points.ravel()), dtype=float).reshape(points.shape)
    return half * (values @ _WEIGHTS)


def bin_probabilities(geometry: BinGeometry, density) -> np.ndarray:
    masses = bin_masses(geometry, density)
    return masses / masses.sum()


def tvn_vs_density(histogram: Histogram, density) -> float:
    """Estimated TVN between the histogram and a density on the same bins."""
    if histogram.total == 0:
        raise ValueError("cannot compute TVN of an empty histogram")
    return tvn_discrete(histogram.probabilities(), bin_probabilities(histogram.geometry, density))


@dataclass
class HistogramRow:
    bin_lo: float
    bin_hi: float
    count: int
    empirical_prob: float
    target_prob: Optional[float] = None
    relative_error: Optional[float] = field(default=None, repr=False)


def histogram_rows(histogram: Histogram, density=None) -> List[HistogramRow]:
    edges = histogram.geometry.edges
    empirical = histogram.probabilities() if histogram.in_range else np.zeros(len(histogram.counts))
    target = bin_probabilities(histogram.geometry, density) if density is not None else None
    return [
        HistogramRow(
            bin_lo=float(edges[b]),
            bin_hi=float(edges[b + 1]),
            count=int(histogram.counts[b]),
            empirical_prob=float(empirical[b]),
            target_prob=None if target is None else float(target[b]),
        )
        for b in range(len(histogram.counts))
    ]


def tail_table(histogram: Histogram, density, tail_from: float) -> List[HistogramRow]:
    """
    Upper-tail bins (bin_lo >= tail_from) with absolute probabilities
    (count / all samples vs. density mass) and the relative error between them.
    """
    if histogram.total == 0:
        raise ValueError("cannot tabulate the tail of an empty histogram")
    edges = histogram.geometry.edges
    masses = bin_masses(histogram.geometry, density)
    rows = []
    for b in range(len(histogram.counts)):
        if edges[b] < tail_from - 1e-9 * histogram.bin_width:
            continue
        empirical = histogram.counts[b] / histogram.total
        target = float(masses[b])
        rows.append(HistogramRow(
            bin_lo=float(edges[b]),
            bin_hi=float(edges[b + 1]),
            count=int(histogram.counts[b]),
            empirical_prob=float(empirical),
            target_prob=target,
            relative_error=(empirical - target) / target if target > 0 else None,
        ))
    return rows


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    return float(stats.ks_2samp(a, b).statistic)

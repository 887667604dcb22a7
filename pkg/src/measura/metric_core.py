"""Metric-space primitives.

A :class:`MetricStructure` bundles a distance function with a reference point
for boundedness checks.  On top of that, this module builds the two derived
metrics the rest of the library relies on:

* :func:`point_removal_metric` re-metrizes a space with one point deleted so
  that sequences approaching the deleted point escape every bounded set, and
* :func:`hilbert_cube_metric` metrizes the slice of [0,1]-valued sequences
  with positive first coordinate, making first coordinates of bounded sets
  stay away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

Point = Any


@dataclass(frozen=True)
class MetricStructure:
    """A distance function plus the reference point used for boundedness.

    ``dist`` must satisfy the metric axioms on the points it is used with;
    :func:`sample_metric_axioms` spot-checks them.  Instances are immutable
    and safe to share between threads.
    """

    dist: Callable[[Point, Point], float]
    reference_point: Point
    label: str = "metric"

    def __call__(self, x: Point, y: Point) -> float:
        return self.dist(x, y)

    def distance_to_reference(self, x: Point) -> float:
        return self.dist(self.reference_point, x)


@dataclass(frozen=True)
class BoundedSetWitness:
    """Closed-ball certificate: a point belongs iff dist(center, x) <= radius."""

    radius: float
    center: Point

    def contains(self, space: MetricStructure, x: Point, slack: float = 1e-12) -> bool:
        return space.dist(self.center, x) <= self.radius + slack


@dataclass(frozen=True)
class MetricAxiomReport:
    """Worst violations found by :func:`sample_metric_axioms`."""

    identity: float
    symmetry: float
    triangle: float
    tol: float

    @property
    def ok(self) -> bool:
        return max(self.identity, self.symmetry, self.triangle) <= self.tol


def real_line(reference_point: float = 0.0) -> MetricStructure:
    """The usual |x - y| metric on the reals."""
    return MetricStructure(lambda x, y: abs(float(x) - float(y)), reference_point, "R")


def sup_norm_space(dim: int, reference_point: Point | None = None) -> MetricStructure:
    """R^dim with the max-norm distance."""
    if reference_point is None:
        reference_point = np.zeros(dim)

    def dist(x: Point, y: Point) -> float:
        return float(np.max(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))

    return MetricStructure(dist, reference_point, f"R^{dim}-sup")


def discrete_space(points: Sequence[Point]) -> MetricStructure:
    """0/1 metric on a finite ground set; reference is the first element."""
    pts = tuple(points)
    if not pts:
        raise ValueError("discrete space needs at least one point")

    def dist(x: Point, y: Point) -> float:
        return 0.0 if x == y else 1.0

    return MetricStructure(dist, pts[0], f"discrete({len(pts)})")


def point_removal_metric(
    base: MetricStructure,
    removed: Point,
    reference_point: Point | None = None,
) -> MetricStructure:
    """Send one point of ``base`` infinitely far away.

    The returned metric on the punctured space is

        d'(y, z) = d(y, z) + |d(removed, y)^-1 - d(removed, z)^-1|,

    topologically equivalent to ``d`` away from ``removed`` while making every
    sequence that d-converges to ``removed`` leave each d'-ball.  Evaluating at
    the removed point itself raises.

    ``reference_point`` must be a point of the punctured space; it defaults to
    the base reference when that differs from ``removed``.
    """
    if reference_point is None:
        reference_point = base.reference_point
        if base.dist(removed, reference_point) == 0.0:
            raise ValueError(
                "base reference coincides with the removed point; pass reference_point"
            )

    def dist(y: Point, z: Point) -> float:
        dy = base.dist(removed, y)
        dz = base.dist(removed, z)
        if dy == 0.0 or dz == 0.0:
            raise ValueError("removed point queried")
        return base.dist(y, z) + abs(1.0 / dy - 1.0 / dz)

    return MetricStructure(dist, reference_point, f"{base.label} minus point")


def hilbert_cube_metric() -> MetricStructure:
    """Metric on finitely supported [0,1]-sequences with positive first coordinate.

    r(x, y) = |1/x_1 - 1/y_1| + sum_{n>=1} 2^-n (|x_n - y_n| ^ 1).

    Points are tuples; trailing zeros are implicit, so the series reduces to a
    finite sum plus an exactly-zero tail.  Bounded sets have first coordinates
    bounded away from zero.  Querying a point with first coordinate zero (or a
    missing first coordinate) raises.
    """

    def dist(x: Sequence[float], y: Sequence[float]) -> float:
        x1 = x[0] if len(x) else 0.0
        y1 = y[0] if len(y) else 0.0
        if x1 <= 0.0 or y1 <= 0.0:
            raise ValueError("not in H_delta domain")
        total = abs(1.0 / x1 - 1.0 / y1)
        half = 0.5
        for n in range(max(len(x), len(y))):
            xn = x[n] if n < len(x) else 0.0
            yn = y[n] if n < len(y) else 0.0
            total += half * min(abs(xn - yn), 1.0)
            half *= 0.5
        return total

    return MetricStructure(dist, (1.0,), "hilbert-cube")


def is_bounded(sample: Iterable[Point], space: MetricStructure, radius_cap: float) -> bool:
    """True iff every sampled point lies within ``radius_cap`` of the reference."""
    pts = list(sample)
    if not pts:
        raise ValueError("empty sample")
    return max(space.distance_to_reference(x) for x in pts) <= radius_cap


def sample_metric_axioms(
    space: MetricStructure,
    points: Sequence[Point],
    n_triples: int,
    rng: np.random.Generator,
    tol: float = 1e-12,
) -> MetricAxiomReport:
    """Spot-check identity, symmetry, triangle inequality on random triples.

    Returns the worst observed violation of each axiom; a verdict of ``ok``
    means no counterexample was found at tolerance ``tol``, not a proof.
    """
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least two sample points")
    idx = rng.integers(0, len(pts), size=(n_triples, 3))
    worst_id = worst_sym = worst_tri = 0.0
    for i, j, k in idx:
        x, y, z = pts[i], pts[j], pts[k]
        dxy = space.dist(x, y)
        worst_id = max(worst_id, abs(space.dist(x, x)))
        worst_sym = max(worst_sym, abs(dxy - space.dist(y, x)))
        worst_tri = max(worst_tri, space.dist(x, z) - dxy - space.dist(y, z))
    return MetricAxiomReport(worst_id, worst_sym, max(worst_tri, 0.0), tol)

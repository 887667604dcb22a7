"""Mass-fragmentation sequences and their separating function families.

A fragmentation state is a nonincreasing sequence in (0, 1] with total mass
at most 1.  Embedded as a point measure on (0, 1] carrying the |1/x - 1/y|
metric, pointwise convergence of states matches weak#-convergence of their
images as long as mass does not leak toward 0; the power sums G_p(s) = sum
s_i^p and the exponential sums H_alpha(s) = sum (1 - exp(-alpha s_i)) are the
workhorse diagnostics.  G_1 is the canonical discontinuity witness: the
states (1/n, ..., 1/n) with n blocks converge pointwise to the zero state
while G_1 stays pinned at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .measures import AtomicMeasure
from .metric_core import MetricStructure

MASS_TOL = 1e-12


def fragment_space() -> MetricStructure:
    """(0, 1] with d(x, y) = |1/x - 1/y|; bounded sets stay away from 0."""
    return MetricStructure(
        lambda x, y: abs(1.0 / float(x) - 1.0 / float(y)), 1.0, "(0,1]-inverse"
    )


@dataclass(frozen=True)
class FragmentationSequence:
    """Finite nonincreasing sequence in (0, 1], total mass <= 1; zeros trimmed."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        while vals and vals[-1] == 0.0:
            vals = vals[:-1]
        object.__setattr__(self, "values", vals)
        for a, b in zip(vals, vals[1:]):
            if b > a:
                raise ValueError("sequence must be nonincreasing")
        if vals and (vals[-1] <= 0.0 or vals[0] > 1.0 + MASS_TOL):
            raise ValueError("entries must lie in (0, 1]")
        if sum(vals) > 1.0 + MASS_TOL:
            raise ValueError("total mass must not exceed 1")

    @property
    def mass(self) -> float:
        return math.fsum(self.values)

    @property
    def is_proper(self) -> bool:
        return abs(self.mass - 1.0) <= MASS_TOL

    def coordinate(self, i: int) -> float:
        return self.values[i] if i < len(self.values) else 0.0

    def __len__(self) -> int:
        return len(self.values)


class ProperFragmentation(FragmentationSequence):
    """Fragmentation state with total mass exactly 1."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_proper:
            raise ValueError(f"mass must equal 1, got {self.mass!r}")


def phi(s: FragmentationSequence) -> AtomicMeasure:
    """Point-measure embedding: one atom per distinct value, weighted by multiplicity."""
    atoms: dict[float, int] = {}
    for v in s.values:
        atoms[v] = atoms.get(v, 0) + 1
    return AtomicMeasure.from_atoms(fragment_space(), [(v, float(k)) for v, k in atoms.items()])


def phi_inverse(mu: AtomicMeasure) -> FragmentationSequence:
    """Invert the embedding: expand integer weights, sort nonincreasing.

    Raises for non-integer weights, atoms outside (0, 1], or total mass above
    1, since such measures are not embeddings of any fragmentation state.
    """
    expanded: list[float] = []
    for p, w in mu.atoms:
        k = round(w)
        if abs(w - k) > 1e-9 or k < 1:
            raise ValueError(f"not in Phi(S_down): non-integer weight {w}")
        x = float(p)
        if not 0.0 < x <= 1.0:
            raise ValueError(f"not in Phi(S_down): atom {x} outside (0, 1]")
        expanded.extend([x] * k)
    if sum(expanded) > 1.0 + 1e-9:
        raise ValueError("not in Phi(S_down): total mass exceeds 1")
    return FragmentationSequence(tuple(sorted(expanded, reverse=True)))


def g_p(s: FragmentationSequence, p: int) -> float:
    """Power sum sum_i s_i^p, correctly rounded."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    return math.fsum(v**p for v in s.values)


def h_alpha(s: FragmentationSequence, alpha: float) -> float:
    """Exponential sum sum_i (1 - exp(-alpha s_i))."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    return math.fsum(1.0 - math.exp(-alpha * v) for v in s.values)


def power_sum_functions(max_p: int) -> tuple[tuple[str, Callable], ...]:
    return tuple((f"G_{p}", lambda s, _p=p: g_p(s, _p)) for p in range(1, max_p + 1))


def exponential_functions(alphas: Sequence[float]) -> tuple[tuple[str, Callable], ...]:
    return tuple((f"H_{a:g}", lambda s, _a=a: h_alpha(s, _a)) for a in alphas)


@dataclass(frozen=True)
class FragmentationConvergenceReport:
    """Family gaps vs pointwise gaps along a sequence of states.

    ``implication_holds`` records the convergence-determining direction on the
    given data: family convergence at ``tol`` forces pointwise convergence at
    ``pointwise_tol``.  It is vacuously true when the family does not converge.
    """

    member_gaps: tuple[tuple[str, tuple[float, ...]], ...]
    pointwise_gaps: tuple[float, ...]
    tol: float
    pointwise_tol: float
    family_converged: bool
    pointwise_converged: bool

    @property
    def implication_holds(self) -> bool:
        return (not self.family_converged) or self.pointwise_converged


def _pointwise_gap(a: FragmentationSequence, b: FragmentationSequence) -> float:
    n = max(len(a), len(b))
    if n == 0:
        return 0.0
    return max(abs(a.coordinate(i) - b.coordinate(i)) for i in range(n))


def convergence_determining_check(
    seq: Sequence[FragmentationSequence],
    limit: FragmentationSequence,
    family: Sequence[tuple[str, Callable]],
    tol: float,
    pointwise_tol: float | None = None,
) -> FragmentationConvergenceReport:
    """Compare family-gap decay with coordinatewise decay along a state sequence."""
    if pointwise_tol is None:
        pointwise_tol = 10.0 * tol
    member_gaps = tuple(
        (name, tuple(abs(fn(s) - fn(limit)) for s in seq)) for name, fn in family
    )
    pointwise = tuple(_pointwise_gap(s, limit) for s in seq)
    family_conv = bool(seq) and all(g[-1] < tol for _, g in member_gaps)
    pointwise_conv = bool(seq) and pointwise[-1] < pointwise_tol
    return FragmentationConvergenceReport(
        member_gaps, pointwise, tol, pointwise_tol, family_conv, pointwise_conv
    )


@dataclass(frozen=True)
class TopologyEquivalenceReport:
    """Both directions between power-sum convergence and pointwise convergence."""

    base: FragmentationConvergenceReport

    @property
    def forward_holds(self) -> bool:
        # pointwise convergence must carry the power sums along (mass is conserved)
        return (not self.base.pointwise_converged) or self.base.family_converged

    @property
    def backward_holds(self) -> bool:
        return self.base.implication_holds

    @property
    def ok(self) -> bool:
        return self.forward_holds and self.backward_holds


def topology_equivalence_check_s1(
    seq: Sequence[FragmentationSequence],
    limit: FragmentationSequence,
    max_p: int,
    tol: float,
) -> TopologyEquivalenceReport:
    """On mass-1 states, power sums and pointwise convergence generate the same topology."""
    for s in list(seq) + [limit]:
        if not s.is_proper:
            raise ValueError("improper sequence: total mass must equal 1")
    report = convergence_determining_check(seq, limit, power_sum_functions(max_p), tol, tol)
    return TopologyEquivalenceReport(report)


def block_uniform_state(n: int) -> FragmentationSequence:
    """The discontinuity witness: n blocks of mass 1/n, with the leading block
    nudged by at most a few ulps so the float masses sum to exactly 1."""
    vals = [1.0 / n] * n
    for _ in range(8):
        residual = 1.0 - math.fsum(vals)
        if residual == 0.0:
            break
        if residual > 0.0:
            vals[0] += residual
        else:
            vals[-1] += residual
    return FragmentationSequence(tuple(vals))

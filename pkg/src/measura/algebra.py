"""Test-function families and the constructive weighted polynomial approximation.

The checkers in this module are sampled certificates: a ``True`` verdict means
"no counterexample found at the given tolerance on the given sample", never a
proof.  Function identity is the ``id`` string; extensional equality is not
decidable, so deduplication is purely syntactic.

:func:`stone_weierstrass_p0` builds, for a continuous g: H -> [0,1] supported
on the slice {x_1 >= delta} of the cube of [0,1]-sequences, a polynomial p
vanishing on the face {x_1 = 0} with the weighted bound |g - p| <= eps * x_1.
The construction is p = x_1 * B_n(g/x_1) with B_n a tensor Bernstein operator;
the degree is escalated until the bound holds on a verification grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binom

from .metric_core import BoundedSetWitness, MetricStructure, Point

ComplexFn = Callable[[Point], complex]


@dataclass(frozen=True)
class TestFunction:
    """An evaluable bounded function with a declared sup bound on its modulus."""

    __test__ = False  # not a pytest collection target

    id: str
    fn: ComplexFn
    sup_bound: float

    def __call__(self, x: Point) -> complex:
        return complex(self.fn(x))

    def conjugate(self) -> "TestFunction":
        f = self.fn
        return TestFunction(f"conj({self.id})", lambda x: complex(f(x)).conjugate(), self.sup_bound)


@dataclass(frozen=True)
class FunctionFamily:
    members: tuple[TestFunction, ...]
    space: MetricStructure

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.members)


def close_multiplicatively(fam: FunctionFamily, depth: int) -> FunctionFamily:
    """All products of at most ``depth`` members and their conjugates.

    Factors are drawn with repetition from the members and their conjugates;
    products are deduplicated by the sorted multiset of factor ids, which also
    makes the output closed under conjugation (conj of a product is a product
    of conjugated factors, already in the enumeration).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    base: dict[str, TestFunction] = {}
    for f in fam.members:
        base.setdefault(f.id, f)
        c = f.conjugate()
        base.setdefault(c.id, c)

    out: dict[str, TestFunction] = {}
    factors = sorted(base.values(), key=lambda f: f.id)
    for size in range(1, depth + 1):
        for combo in itertools.combinations_with_replacement(factors, size):
            pid = " * ".join(f.id for f in combo)
            if pid in out:
                continue
            if size == 1:
                out[pid] = combo[0]
                continue
            fns = tuple(f.fn for f in combo)
            bound = math.prod(f.sup_bound for f in combo)

            def product(x, _fns=fns):
                val = complex(1.0)
                for g in _fns:
                    val *= complex(g(x))
                return val

            out[pid] = TestFunction(pid, product, bound)
    return FunctionFamily(tuple(out.values()), fam.space)


def check_separates_points(
    fam: FunctionFamily,
    sample_pairs: Sequence[tuple[Point, Point]],
    tol: float,
) -> bool:
    """True iff for every sampled pair some member differs by more than tol."""
    for x, y in sample_pairs:
        if not any(abs(f(x) - f(y)) > tol for f in fam.members):
            return False
    return True


def check_vanishes_nowhere(fam: FunctionFamily, sample: Sequence[Point], tol: float) -> bool:
    """True iff at every sampled point some member has modulus above tol."""
    for x in sample:
        if not any(abs(f(x)) > tol for f in fam.members):
            return False
    return True


def check_bounded_below_on(
    fam: FunctionFamily,
    witness: BoundedSetWitness,
    sample: Sequence[Point],
) -> tuple[bool, str | None, float]:
    """Find a member whose modulus stays away from zero on the sampled set.

    The sample must lie inside the witness ball.  Returns (found, member id,
    delta) where delta is the best achieved sampled minimum modulus.
    """
    if not fam.members:
        return False, None, 0.0
    for x in sample:
        if not witness.contains(fam.space, x):
            raise ValueError("sample point outside the bounded-set witness")
    best_id, best_min = None, -1.0
    for f in fam.members:
        m = min(abs(f(x)) for x in sample)
        if m > best_min:
            best_id, best_min = f.id, m
    return best_min > 0.0, best_id, best_min


def embed_hilbert_cube(fam: FunctionFamily, x: Point, tol: float = 1e-9) -> tuple[float, ...]:
    """Coordinate map x -> (f_1(x), f_2(x), ...) for [0,1]-valued members.

    Injective on samples whenever the family separates points; the image is a
    finitely supported cube point compatible with ``hilbert_cube_metric``.
    """
    coords = []
    for f in fam.members:
        v = f(x)
        if abs(v.imag) > tol or v.real < -tol or v.real > 1.0 + tol:
            raise ValueError(f"member {f.id} out of [0,1] range at sample point: {v}")
        coords.append(min(max(v.real, 0.0), 1.0))
    return tuple(coords)


def normalize_to_unit(fam: FunctionFamily) -> FunctionFamily:
    """Rework a family into [0,1]-valued members spanning the same algebra.

    Each member is split into real and imaginary parts; each real part g with
    bound B contributes g^2 and g^2 (B - g), both nonnegative, which are then
    divided by their conservative sup bounds (B^2 and 2 B^3) so every output
    maps into [0,1].  The scale factors are recorded in the member ids.
    """
    out: dict[str, TestFunction] = {}
    for f in fam.members:
        g = f.fn
        parts = (
            (f"re({f.id})", lambda x, _g=g: complex(_g(x)).real),
            (f"im({f.id})", lambda x, _g=g: complex(_g(x)).imag),
        )
        bound = f.sup_bound
        for pid, part in parts:
            sq_scale = max(bound * bound, 1.0)
            gap_scale = max(2.0 * bound**3, 1.0)

            def sq(x, _p=part, _s=sq_scale):
                v = _p(x)
                return v * v / _s

            def gap(x, _p=part, _b=bound, _s=gap_scale):
                v = _p(x)
                return v * v * (_b - v) / _s

            out.setdefault(f"sq({pid})/{sq_scale:g}", TestFunction(f"sq({pid})/{sq_scale:g}", sq, 1.0))
            out.setdefault(
                f"sqgap({pid})/{gap_scale:g}", TestFunction(f"sqgap({pid})/{gap_scale:g}", gap, 1.0)
            )
    return FunctionFamily(tuple(out.values()), fam.space)


# ---------------------------------------------------------------------------
# Polynomials on the cube
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubePolynomial:
    """Multivariate polynomial in the first ``arity`` cube coordinates.

    ``terms`` maps exponent multi-indices to exact rational coefficients, so
    membership in the face-vanishing class is a syntactic check.  Evaluation
    uses an attached factored Bernstein form when present (numerically stable
    at high degree); ``evaluate_exact`` always goes through the terms with
    exact rational arithmetic and serves as the oracle for the factored form.
    """

    terms: dict[tuple[int, ...], Fraction]
    arity: int
    degree: int
    _bernstein_values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def in_p0(self) -> bool:
        """Every term has a positive first-coordinate exponent (syntactic)."""
        return all(m[0] >= 1 for m, c in self.terms.items() if c != 0)

    def evaluate(self, x: Sequence[float]) -> float:
        xs = [float(x[i]) if i < len(x) else 0.0 for i in range(self.arity)]
        if self._bernstein_values is not None:
            return xs[0] * float(_bernstein_eval(self._bernstein_values, self.degree, xs))
        total = 0.0
        for m, c in self.terms.items():
            total += float(c) * math.prod(xi**e for xi, e in zip(xs, m))
        return total

    def evaluate_exact(self, x: Sequence[float | Fraction]) -> Fraction:
        xs = [Fraction(x[i]) if i < len(x) else Fraction(0) for i in range(self.arity)]
        total = Fraction(0)
        for m, c in self.terms.items():
            term = c
            for xi, e in zip(xs, m):
                term *= xi**e
            total += term
        return total


def _bernstein_eval(values: np.ndarray, n: int, xs: Sequence[float]) -> float:
    """Contract lattice values with Bernstein weights along each axis."""
    out = values
    j = np.arange(n + 1)
    for xi in xs:
        w = binom.pmf(j, n, xi) if 0.0 < xi < 1.0 else _pmf_edge(j, n, xi)
        out = np.tensordot(w, out, axes=(0, 0))
    return float(out)


def _pmf_edge(j: np.ndarray, n: int, x: float) -> np.ndarray:
    # binom.pmf handles the edges too, but 0^0 warnings are avoided this way
    w = np.zeros(n + 1)
    if x <= 0.0:
        w[0] = 1.0
    elif x >= 1.0:
        w[n] = 1.0
    return w


def _lattice(n: int, arity: int):
    return itertools.product(range(n + 1), repeat=arity)


_FACE_OFFSET = 2.0**-30  # power of two: scaling by it is exact in floats


def _scaled_ratio_lattice(g, n: int, arity: int) -> tuple[np.ndarray, list[Fraction]]:
    """Lattice values of g(x)/x_1, as floats (for checks) and exact Fractions.

    On the x_1 = 0 face the ratio is taken by continuity, sampled just inside
    the cube; for g supported away from the face this is exactly 0.
    """
    floats = np.zeros((n + 1,) * arity)
    fracs: list[Fraction] = []
    for j in _lattice(n, arity):
        if j[0] == 0:
            x = (_FACE_OFFSET,) + tuple(ji / n for ji in j[1:])
            ratio = float(g(x)) / _FACE_OFFSET  # exact: power-of-two scaling
            frac = Fraction(ratio)
        else:
            x = tuple(ji / n for ji in j)
            gv = float(g(x))
            ratio = gv * n / j[0]
            frac = Fraction(gv) * Fraction(n, j[0])
        floats[j] = ratio
        fracs.append(frac)
    return floats, fracs


def _power_terms(fracs: list[Fraction], n: int, arity: int) -> dict[tuple[int, ...], Fraction]:
    """Exact power-basis expansion of the tensor Bernstein polynomial.

    Uses iterated forward differences: the coefficient of x^m is
    prod_i C(n, m_i) * (Delta^m value)(0), computed over a common denominator
    so the difference tables run on Python integers.
    """
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    table = np.empty((n + 1,) * arity, dtype=object)
    for idx, j in enumerate(_lattice(n, arity)):
        table[j] = fracs[idx].numerator * (den // fracs[idx].denominator)
    for axis in range(arity):
        table = np.swapaxes(table, 0, axis)
        for order in range(1, n + 1):
            table[order:] = table[order:] - table[order - 1 : -1]
        table = np.swapaxes(table, 0, axis)
    terms: dict[tuple[int, ...], Fraction] = {}
    for m in _lattice(n, arity):
        num = table[m]
        if num == 0:
            continue
        coeff = Fraction(num, den)
        for mi in m:
            coeff *= math.comb(n, mi)
        # multiply by x_1: shift the first exponent
        terms[(m[0] + 1,) + m[1:]] = coeff
    return terms


def stone_weierstrass_p0(
    g: Callable[[Sequence[float]], float],
    delta: float,
    eps: float,
    degree_budget: int,
    arity: int = 1,
    grid_points: int = 50,
) -> CubePolynomial:
    """Weighted polynomial approximation vanishing on the x_1 = 0 face.

    ``g`` must be continuous, [0,1]-valued, depend only on its first ``arity``
    coordinates, and vanish whenever x_1 < delta (checked on the grid).  The
    returned polynomial p satisfies |g(x) - p(x)| <= eps * x_1 at every point
    of the verification grid (``grid_points`` per axis, faces included), or a
    RuntimeError("degree budget exhausted") is raised.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if degree_budget < 1:
        raise ValueError("degree_budget must be >= 1")
    axes = np.linspace(0.0, 1.0, grid_points)
    grid = list(itertools.product(axes, repeat=arity))
    gvals = np.array([float(g(x)) for x in grid])
    x1 = np.array([x[0] for x in grid])

    if np.any(np.abs(gvals[x1 < delta]) > 1e-12):
        raise ValueError("support assertion violated: g does not vanish below delta")
    if gvals.min() < -1e-9 or gvals.max() > 1.0 + 1e-9:
        raise ValueError("g must take values in [0, 1]")

    degrees = []
    n = 1
    while n < degree_budget:
        degrees.append(n)
        n *= 2
    degrees.append(degree_budget)

    for n in degrees:
        floats, fracs = _scaled_ratio_lattice(g, n, arity)
        approx = np.array([_bernstein_eval(floats, n, x) for x in grid])
        if np.all(np.abs(gvals - x1 * approx) <= eps * x1 + 1e-12):
            terms = _power_terms(fracs, n, arity)
            return CubePolynomial(terms, arity, n, _bernstein_values=floats)
    raise RuntimeError(
        f"degree budget exhausted: no degree <= {degree_budget} meets the weighted bound {eps}"
    )

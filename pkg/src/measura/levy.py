"""Levy-Khintchine exponents on R^D and Laplace functionals of random measures.

The characteristic exponent of an infinitely divisible law is evaluated from
its triple (drift b, covariance C, jump measure mu); the recovery routines run
the inverse direction, turning large-argument limits into finite schedules
with extrapolation and a consistency check.

Drift recovery caveat: the limit -(i/m)(Psi(m e_k) + m^2 C_kk / 2) converges
to b_k minus the compensator first moment ∫ x_k 1_{|x|<=1} dmu(x) whenever mu
charges the unit ball (the bounded oscillating part of the integral dies at
rate 1/m, the linear compensator part does not).  ``recover_b`` therefore
accepts the compensator moment as an optional correction; without it the
returned vector is the drift relative to an uncompensated exponent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import FunctionFamily, TestFunction
from .measures import AtomicMeasure, finite_measure_space, integrate
from .metric_core import MetricStructure, discrete_space, point_removal_metric, sup_norm_space

Vector = np.ndarray
ExponentFn = Callable[[Vector], complex]


def levy_ground_space(dim: int) -> MetricStructure:
    """R^dim minus the origin, with the sup-norm metric plus the 1/|x| pull.

    d(x, y) = ||x - y||_inf + | ||x||_inf^-1 - ||y||_inf^-1 |; the origin is
    infinitely far away, so jump measures are boundedly finite on this space.
    """
    base = sup_norm_space(dim)
    return point_removal_metric(base, np.zeros(dim), reference_point=np.ones(dim))


def indicator_compensator(x) -> float:
    """Default compensator weight 1_{||x||_inf <= 1}."""
    return 1.0 if float(np.max(np.abs(np.asarray(x, dtype=float)))) <= 1.0 else 0.0


def tent_compensator(x) -> float:
    """Piecewise-linear weight max(0, 1 - ||x||_inf).

    A compactly supported substitute for the indicator with value 1 at the
    origin.  It is only piecewise C^1; callers needing a genuinely smooth
    weight should supply their own.
    """
    return max(0.0, 1.0 - float(np.max(np.abs(np.asarray(x, dtype=float)))))


@dataclass(frozen=True)
class LevyTriple:
    """Drift vector, covariance matrix and jump measure of an infinitely divisible law."""

    b: Vector
    C: Vector
    mu: AtomicMeasure

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        C = np.asarray(self.C, dtype=float)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "C", C)
        if C.shape != (b.size, b.size):
            raise ValueError("C must be D x D with D = len(b)")
        if not np.allclose(C, C.T, atol=1e-12):
            raise ValueError("C must be symmetric")
        if np.linalg.eigvalsh(C).min() < -1e-10:
            raise ValueError("C must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.b.size

    def quadratic_jump_moment(self) -> float:
        """∫ (1 ∧ ||x||_inf^2) dmu, finite by construction for atom lists."""
        total = 0.0
        for p, w in self.mu.atoms:
            total += w * min(1.0, float(np.max(np.abs(np.asarray(p, dtype=float)))) ** 2)
        return total

    def compensator_moment(self, compensator: Callable = indicator_compensator) -> Vector:
        """∫ x h(x) dmu, the linear term the compensator injects into the exponent."""
        out = np.zeros(self.dim)
        for p, w in self.mu.atoms:
            out += w * compensator(p) * np.asarray(p, dtype=float)
        return out


def psi_exponent(triple: LevyTriple, u: Sequence[float], compensator: Callable = indicator_compensator) -> complex:
    """log E[exp(i u . Z)] for the law with the given triple.

    i u.b - u.Cu/2 + sum_atoms w (exp(i u.x) - 1 - i u.x h(x)) with h the
    compensator weight (indicator of the unit sup-norm ball by default).
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (triple.dim,):
        raise ValueError(f"u must have dimension {triple.dim}")
    val = 1j * float(u @ triple.b) - 0.5 * float(u @ triple.C @ u)
    for p, w in triple.mu.atoms:
        x = np.asarray(p, dtype=float)
        phase = float(u @ x)
        val += w * (np.exp(1j * phase) - 1.0 - 1j * phase * compensator(x))
    return complex(val)


def default_m_schedule(m_max: float = 1e3, points: int = 8) -> np.ndarray:
    """Geometric schedule ending at m_max; phases spread enough to average
    the oscillating jump contribution out of the extrapolation."""
    return np.geomspace(m_max / 5.0, m_max, points)


def _extrapolate(ms: np.ndarray, vals: np.ndarray, power: float) -> float:
    """Least-squares fit of vals ~ a + b * m^-power; returns a.

    With two points this is plain Richardson extrapolation; more points damp
    oscillatory error terms that a two-point rule would amplify.
    """
    if len(ms) == 1:
        return float(vals[0])
    design = np.column_stack([np.ones_like(ms), ms ** (-power)])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    return float(coef[0])


def _consistent_limit(ms: np.ndarray, vals: np.ndarray, power: float, tol: float, what: str) -> float:
    full = _extrapolate(ms, vals, power)
    tail = _extrapolate(ms[len(ms) // 2 :], vals[len(ms) // 2 :], power)
    if abs(full - tail) > tol:
        raise RuntimeError(
            f"non-convergent schedule for {what}: full-fit {full:.6g} vs tail-fit {tail:.6g}, "
            f"raw estimates {np.array2string(vals, precision=6)}"
        )
    return tail


def _check_schedule(m_schedule: Sequence[float]) -> np.ndarray:
    ms = np.asarray(m_schedule, dtype=float)
    if ms.size < 2 or np.any(np.diff(ms) <= 0):
        raise ValueError("m_schedule must be increasing with at least 2 entries")
    return ms


def recover_C(psi: ExponentFn, dim: int, m_schedule: Sequence[float], tol: float = 1e-2) -> np.ndarray:
    """Covariance from the exponent: C_kj = -lim m^-2 [Psi(m(e_k+e_j)) - Psi(m e_k) - Psi(m e_j)].

    Each entry is extrapolated along the schedule with a 1/m^2 error model and
    cross-checked between the full and tail fits; disagreement above ``tol``
    raises with diagnostics.
    """
    ms = _check_schedule(m_schedule)
    eye = np.eye(dim)
    C = np.zeros((dim, dim))
    for k in range(dim):
        for j in range(k, dim):
            raw = np.empty(ms.size)
            for i, m in enumerate(ms):
                bracket = (
                    psi(m * (eye[k] + eye[j])) - psi(m * eye[k]) - psi(m * eye[j])
                )
                raw[i] = -bracket.real / (m * m)
            C[k, j] = C[j, k] = _consistent_limit(ms, raw, 2.0, tol, f"C[{k},{j}]")
    return C


def recover_b(
    psi: ExponentFn,
    C: np.ndarray,
    dim: int,
    m_schedule: Sequence[float],
    compensator_moment: Sequence[float] | None = None,
    tol: float = 5e-2,
) -> np.ndarray:
    """Drift from the exponent once C is known.

    b_k = lim -(i/m)(Psi(m e_k) + m^2 C_kk / 2) plus, when supplied, the
    compensator moment ∫ x_k 1_{|x|<=1} dmu (see the module docstring for why
    that correction is needed as soon as mu charges the unit ball).  A
    non-vanishing imaginary residue in the bracket triggers a warning.
    """
    ms = _check_schedule(m_schedule)
    C = np.asarray(C, dtype=float)
    eye = np.eye(dim)
    b = np.zeros(dim)
    for k in range(dim):
        raw = np.empty(ms.size)
        resid = 0.0
        for i, m in enumerate(ms):
            val = (-1j / m) * (psi(m * eye[k]) + 0.5 * m * m * C[k, k])
            raw[i] = val.real
            resid = max(resid, abs(val.imag))
        est = _consistent_limit(ms, raw, 1.0, tol, f"b[{k}]")
        if resid > 0.05 * (1.0 + abs(est)):
            warnings.warn(
                f"recover_b: imaginary residue {resid:.3g} in component {k}; "
                "the supplied C may not match the exponent",
                stacklevel=2,
            )
        b[k] = est
    if compensator_moment is not None:
        b = b + np.asarray(compensator_moment, dtype=float)
    return b


def f_u(u: Sequence[float]) -> TestFunction:
    """F_u(x) = exp(i u . x) - 1, the centered plane wave; |F_u| <= 2."""
    u = np.atleast_1d(np.asarray(u, dtype=float))

    def fn(x):
        return np.exp(1j * float(u @ np.atleast_1d(np.asarray(x, dtype=float)))) - 1.0

    return TestFunction(f"F[{np.array2string(u, precision=4)}]", fn, 2.0)


def g_u(u: Sequence[float], compensator: Callable = indicator_compensator) -> TestFunction:
    """G_u = F_u - psi_u with psi_u(x) = i u.x h(x)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))

    def fn(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        phase = float(u @ x)
        return np.exp(1j * phase) - 1.0 - 1j * phase * compensator(x)

    return TestFunction(f"G[{np.array2string(u, precision=4)}]", fn, math.inf)


def levy_family(dim: int, u_samples: Sequence[tuple[Sequence[float], Sequence[float]]]) -> FunctionFamily:
    """Sampled family of products F_u * F_v on the punctured space; |F_u F_v| <= 4."""
    members = []
    for i, (u, v) in enumerate(u_samples):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))

        def fn(x, _u=u, _v=v):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            return (np.exp(1j * float(_u @ x)) - 1.0) * (np.exp(1j * float(_v @ x)) - 1.0)

        members.append(TestFunction(f"FuFv[{i}]", fn, 4.0))
    return FunctionFamily(tuple(members), levy_ground_space(dim))


# ---------------------------------------------------------------------------
# Random measures on a finite ground set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomMeasureLaw:
    """Drift measure b on a finite set E plus a jump measure over M_f(E) \\ {0}.

    The jump measure's atoms are themselves atomic measures on E; each must
    have positive total mass.
    """

    ground_set: tuple
    b: AtomicMeasure
    mu: AtomicMeasure

    def __post_init__(self):
        for nu, _ in self.mu.atoms:
            if not isinstance(nu, AtomicMeasure) or nu.total_mass <= 0.0:
                raise ValueError("jump-measure atoms must be nonzero finite measures on E")


def finite_ground_space(labels: Sequence) -> MetricStructure:
    return discrete_space(tuple(labels))


def laplace_functional(law: RandomMeasureLaw, phi: Callable) -> float:
    """L(phi) = <phi, b> + sum_atoms w (1 - exp(-<phi, nu>)) for phi >= 0 on E."""
    for e in law.ground_set:
        if phi(e) < 0.0:
            raise ValueError(f"negative phi value at {e!r}")
    linear = integrate(law.b, phi).real if len(law.b) else 0.0
    jump = 0.0
    for nu, w in law.mu.atoms:
        jump += w * (1.0 - math.exp(-integrate(nu, phi).real))
    return float(linear + jump)


def f_phi(ground_space: MetricStructure, phi: Callable, name: str) -> TestFunction:
    """F_phi(nu) = 1 - exp(-<phi, nu>) as a function of the measure nu."""

    def fn(nu: AtomicMeasure):
        return 1.0 - math.exp(-integrate(nu, phi).real)

    return TestFunction(name, fn, 1.0)


def f_phi_family(labels: Sequence, phi_samples: Sequence[Callable]) -> FunctionFamily:
    """Sampled family {F_phi} on nonzero finite measures over the ground set.

    Within its linear span the family is multiplicatively closed through
    F_phi * F_psi = F_phi + F_psi - F_{phi+psi} (expand both sides in
    a = exp(-<phi,nu>), b = exp(-<psi,nu>): each equals 1 - a - b + ab).
    """
    ground = finite_ground_space(labels)
    reference = AtomicMeasure.dirac(ground, tuple(labels)[0], 1.0)
    members = tuple(
        f_phi(ground, phi, f"Fphi[{i}]") for i, phi in enumerate(phi_samples)
    )
    return FunctionFamily(members, finite_measure_space(reference))


def recover_b_measure(
    L: Callable[[Callable], float],
    labels: Sequence,
    m_schedule: Sequence[float],
    tol: float = 1e-6,
    weight_floor: float = 1e-12,
) -> AtomicMeasure:
    """Drift measure from a Laplace functional: <b, 1_e> = lim (1/m) L(m 1_e).

    The jump contribution (1 - exp(-m <1_e, nu>))/m decays smoothly like 1/m,
    so two-point Richardson on the schedule tail is exact up to exponentially
    small terms; successive extrapolants must agree within ``tol``.
    """
    ms = _check_schedule(m_schedule)
    ground = finite_ground_space(labels)
    atoms = []
    for e in labels:
        def phi(x, _e=e):
            return 1.0 if x == _e else 0.0

        vals = np.array([L(lambda x, _m=m: _m * phi(x)) / m for m in ms])
        rich = [
            (ms[i + 1] * vals[i + 1] - ms[i] * vals[i]) / (ms[i + 1] - ms[i])
            for i in range(ms.size - 1)
        ]
        if len(rich) >= 2 and abs(rich[-1] - rich[-2]) > tol:
            raise RuntimeError(
                f"non-convergent schedule for <b, 1_{e!r}>: extrapolants {rich}"
            )
        weight = rich[-1]
        if weight > weight_floor:
            atoms.append((e, weight))
    return AtomicMeasure.from_atoms(ground, atoms)

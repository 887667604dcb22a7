"""Killed Brownian motion, excursion paths, and the excursion-measure target.

The simulation uses exact Gaussian increments with a per-step Brownian-bridge
crossing correction, so the law of the recorded absorption time matches the
true first hitting time up to grid quantization (naive first-nonpositive-step
absorption would bias lifetimes upward by O(sqrt(dt))).

Path functionals are products of time-window integrals F_{f,g}(e) =
∫ f(t) g(e(t)) dt and a lifetime weight h(zeta).  Their scaled expectations
under killed Brownian motion started at eps are compared against the target
computed from the 3-dimensional Bessel representation: for lifetime weight h
and window pairs (f_i, g_i),

    target = ∫ f(t) ∫_0^inf h(tbar + r) E_0[ g(rho_t)/rho_tbar * l^{rho_tbar}(r) ] dr dt,

with rho a 3-d Bessel process from 0 (simulated exactly as the norm of a
3-d Brownian motion) and l^a the first-hitting-time density of level 0 from
level a, l^a(r) = a (2 pi r^3)^(-1/2) exp(-a^2 / (2r)).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

TWO_PI = 2.0 * math.pi


def kappa(r):
    """(2 pi r^3)^(-1/2), the excursion-length intensity."""
    r = np.asarray(r, dtype=float)
    return (TWO_PI * r**3) ** (-0.5)


def levy_hitting_density(alpha, r):
    """Density of the first time Brownian motion from alpha > 0 hits 0.

    l^alpha(r) = alpha (2 pi r^3)^(-1/2) exp(-alpha^2/(2r)); broadcasts over
    both arguments and returns 0 at r <= 0.
    """
    alpha = np.asarray(alpha, dtype=float)
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0.0, r, 1.0)
    val = alpha * (TWO_PI * safe**3) ** (-0.5) * np.exp(-(alpha**2) / (2.0 * safe))
    return np.where(r > 0.0, val, 0.0)


def levy_survival(alpha, r_cut):
    """P(hitting time > r_cut) = erf(alpha / sqrt(2 r_cut))."""
    alpha = np.asarray(alpha, dtype=float)
    return erf(alpha / np.sqrt(2.0 * r_cut))


@dataclass(frozen=True)
class ExcursionPath:
    """Nonnegative path on a uniform grid with an explicit lifetime.

    ``zeta`` is the first grid time the path is absorbed at 0; censored paths
    (not absorbed before the horizon) carry ``zeta = inf``.  Values at grid
    times beyond the lifetime are zero, and the path is extended by zero past
    its grid.
    """

    grid: np.ndarray
    values: np.ndarray
    zeta: float
    censored: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.shape != values.shape or grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid and values must be matching 1-d arrays")
        if grid[0] != 0.0:
            raise ValueError("grid must start at 0")
        if np.any(values < 0.0):
            raise ValueError("path values must be nonnegative")
        if not self.zeta > 0.0:
            raise ValueError("lifetime must be positive: the zero path is excluded")
        if np.any(values[grid > self.zeta] != 0.0):
            raise ValueError("values beyond the lifetime must be zero")

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    @property
    def end(self) -> float:
        return float(self.grid[-1])


def _endpoint_values(path: ExcursionPath, left: np.ndarray, right: np.ndarray):
    """Piecewise-linear values at segment endpoints, zero past the grid end.

    The path is treated as 0 on the open interval (end, inf); a segment whose
    left endpoint sits at the grid end therefore starts from 0.
    """
    vl = np.interp(left, path.grid, path.values)
    vr = np.interp(right, path.grid, path.values)
    vl[left >= path.end] = 0.0
    vr[right > path.end] = 0.0
    return vl, vr


def _mean_abs_clipped(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mean of min(|x|, 1) for x uniform on [lo, hi], exact closed form."""
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)

    def antideriv(x):
        inner = np.abs(x) <= 1.0
        return np.where(inner, np.sign(x) * x * x / 2.0, np.sign(x) * (np.abs(x) - 0.5))

    span = hi - lo
    flat = span <= 0.0
    safe_span = np.where(flat, 1.0, span)
    avg = (antideriv(hi) - antideriv(lo)) / safe_span
    return np.where(flat, np.minimum(np.abs(lo), 1.0), avg)


def excursion_metric(e1: ExcursionPath, e2: ExcursionPath) -> float:
    """(∫ |e1 - e2| ^ 1 dt) ^ 1 + |1/zeta_1 - 1/zeta_2|.

    The integral is evaluated exactly for the piecewise-linear representation:
    the merged grid is refined at every crossing of the difference through 0
    and +-1, where the integrand kinks.  Plain trapezoid on the unrefined
    merged grid can violate the triangle inequality by O(dt); the exact value
    cannot.
    """
    tau = np.union1d(e1.grid, e2.grid)
    left, right = tau[:-1], tau[1:]
    v1l, v1r = _endpoint_values(e1, left, right)
    v2l, v2r = _endpoint_values(e2, left, right)
    lo = v1l - v2l
    hi = v1r - v2r
    integral = float(np.sum((right - left) * _mean_abs_clipped(lo, hi)))
    inv1 = 0.0 if math.isinf(e1.zeta) else 1.0 / e1.zeta
    inv2 = 0.0 if math.isinf(e2.zeta) else 1.0 / e2.zeta
    return min(integral, 1.0) + abs(inv1 - inv2)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _simulate_values(rng: np.random.Generator, eps: float, dt: float, max_steps: int):
    """Euler walk from eps with exact Gaussian steps and bridge-crossing kill.

    Returns (values, absorbed): values start at eps and, when absorbed, end
    with the 0 recorded at the absorption grid time.  Censored walks run to
    max_steps.  Each step kills with probability exp(-2 x_k x_{k+1} / dt)
    even when both endpoints stay positive.
    """
    sqdt = math.sqrt(dt)
    chunks = [np.array([eps])]
    x = eps
    done = 0
    block = 256
    while done < max_steps:
        size = min(block, max_steps - done)
        xs = x + np.cumsum(rng.standard_normal(size)) * sqdt
        prev = np.empty(size)
        prev[0] = x
        prev[1:] = xs[:-1]
        u = rng.random(size)
        crossed = (xs <= 0.0) | (u < np.exp(np.minimum(0.0, -2.0 * prev * xs / dt)))
        if crossed.any():
            k = int(np.argmax(crossed))
            tail = xs[:k].copy() if k else np.empty(0)
            chunks.append(np.concatenate([tail, [0.0]]))
            return np.concatenate(chunks), True
        chunks.append(xs)
        x = float(xs[-1])
        done += size
        block = min(block * 4, 1 << 16)
    return np.concatenate(chunks), False


def _as_path(values: np.ndarray, dt: float, absorbed: bool) -> ExcursionPath:
    grid = np.arange(values.size) * dt
    zeta = float(grid[-1]) if absorbed else math.inf
    return ExcursionPath(grid, values, zeta, censored=not absorbed)


def sample_killed_bm(eps: float, dt: float, horizon: float, seed) -> ExcursionPath:
    """One killed-Brownian path started at eps, absorbed at 0 or censored at the horizon."""
    if eps <= 0.0 or dt <= 0.0:
        raise ValueError("eps and dt must be positive")
    rng = np.random.default_rng(seed)
    values, absorbed = _simulate_values(rng, eps, dt, int(round(horizon / dt)))
    return _as_path(values, dt, absorbed)


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExcursionFunctional:
    """Lifetime weight times a product of time-window integrals.

    F(e) = h(zeta(e)) * prod_i ∫ f_i(t) g_i(e(t)) dt.

    ``h`` must be constant on [h_constant_after, inf); each pair is
    (f, f_support_end, g) with f supported in [0, f_support_end] and g(0) = 0
    (so the window integrand dies with the path).  f, g, h must accept numpy
    arrays.
    """

    h: Callable
    h_constant_after: float
    pairs: tuple[tuple[Callable, float, Callable], ...] = ()

    def __post_init__(self):
        for _, t_end, g in self.pairs:
            if t_end <= 0.0:
                raise ValueError("window support must have positive length")
            if abs(float(g(0.0))) > 1e-12:
                raise ValueError("level weights must vanish at 0")

    @property
    def h_tail_value(self) -> float:
        # sample strictly inside the constant ray: h need only be constant on
        # the open interval beyond the declared point (hard steps)
        return float(self.h(self.h_constant_after + 1.0))


def eval_functional(F: ExcursionFunctional, e: ExcursionPath) -> float:
    """Evaluate the functional on one path (trapezoid over the path grid)."""
    if e.censored:
        if F.h_constant_after > e.end + 1e-12:
            raise RuntimeError("horizon too short: h not yet constant at censoring time")
        if any(t_end > e.end + 1e-12 for _, t_end, _ in F.pairs):
            raise RuntimeError("horizon too short: window support exceeds censoring time")
        hval = F.h_tail_value
    else:
        hval = float(F.h(e.zeta))
    out = hval
    for f, t_end, g in F.pairs:
        mask = e.grid <= t_end + 1e-12
        t = e.grid[mask]
        integrand = np.asarray(f(t), dtype=float) * np.asarray(g(e.values[mask]), dtype=float)
        out *= float(np.trapezoid(integrand, t))
    return out


def empirical_lhs(
    F: ExcursionFunctional,
    eps: float,
    n_paths: int,
    dt: float,
    horizon: float,
    seed: int,
    workers: int = 1,
) -> tuple[float, float]:
    """(1/eps) E_eps[F] by Monte Carlo over killed-Brownian paths.

    Per-path RNG streams are derived from (seed, path index), so the estimate
    is independent of how paths are partitioned across workers; returns
    (mean, standard error).
    """
    if n_paths < 100:
        raise ValueError("n_paths must be at least 100")
    max_steps = int(round(horizon / dt))

    def one(i: int) -> float:
        rng = np.random.default_rng((seed, i))
        values, absorbed = _simulate_values(rng, eps, dt, max_steps)
        return eval_functional(F, _as_path(values, dt, absorbed))

    if workers <= 1:
        vals = np.fromiter((one(i) for i in range(n_paths)), dtype=float, count=n_paths)
    else:
        bounds = np.linspace(0, n_paths, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda ab: [one(i) for i in range(ab[0], ab[1])], zip(bounds[:-1], bounds[1:]))
            )
        vals = np.concatenate([np.asarray(p) for p in parts])
    vals = vals / eps
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths))


def _bessel3_at(times: np.ndarray, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Norms of a 3-d Brownian motion from 0 at the given times (exact in law)."""
    pos = np.zeros((n_paths, 3))
    out = np.empty((n_paths, times.size))
    out[:, 0] = 0.0
    for j in range(1, times.size):
        step = times[j] - times[j - 1]
        pos += rng.standard_normal((n_paths, 3)) * math.sqrt(step)
        out[:, j] = np.linalg.norm(pos, axis=1)
    return out


def target_rhs(
    F: ExcursionFunctional,
    n_bessel: int,
    dt: float,
    r_grid: Sequence[float],
    seed,
) -> tuple[float, float]:
    """∫ F dmu_exc via the Bessel representation; returns (value, std error).

    With no window pairs the value is the deterministic quadrature
    ∫ h(r) kappa(r) dr, requiring h to vanish near 0 (the excursion measure
    has infinite total mass) and using the closed-form tail
    h_tail * sqrt(2 / (pi * cutoff)) beyond the point where h is constant.

    With pairs, 3-d Bessel paths from 0 are sampled at the f-support grid and
    the r-integral against the hitting density is truncated at r_grid's end
    with the erf tail; the t-quadrature runs over all orderings through the
    max-index decomposition, so any number of pairs costs O(grid) per path.
    """
    r = np.asarray(r_grid, dtype=float)
    if not F.pairs:
        probe = np.geomspace(1e-8, 1e-2, 16)
        if max(abs(float(F.h(p))) for p in probe) > 1e-12:
            raise ValueError(
                "integral against the excursion measure may be infinite: "
                "h must vanish near 0 when no window pair is present"
            )
        cutoff = max(F.h_constant_after, 1e-2)
        head, _ = quad(lambda s: float(F.h(s)) * float(kappa(s)), 0.0, cutoff, points=(1e-2,), limit=200)
        tail = F.h_tail_value * math.sqrt(2.0 / (math.pi * cutoff))
        return float(head + tail), 0.0

    if r.size < 2 or r[0] < 0.0 or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be increasing and nonnegative")
    t_max = max(t_end for _, t_end, _ in F.pairs)
    n_steps = int(math.ceil(t_max / dt))
    times = np.arange(n_steps + 1) * dt
    if times[0] + r[-1] < F.h_constant_after:
        raise ValueError("r_grid too short: h must be constant beyond times[0] + r_grid[-1]")

    rng = np.random.default_rng(seed)
    rho = _bessel3_at(times, n_bessel, rng)

    # H[i, j] = ∫ h(t_j + s) l^{rho_ij}(s) ds, truncated at r[-1] with erf tail
    h_tail = F.h_tail_value
    H = np.empty_like(rho)
    for j in range(times.size):
        hj = np.asarray(F.h(times[j] + r), dtype=float)
        dens = levy_hitting_density(rho[:, j : j + 1], r[None, :])
        H[:, j] = np.trapezoid(dens * hj[None, :], r, axis=1)
        H[:, j] += h_tail * levy_survival(rho[:, j], r[-1])

    # trapezoid weights on the common time grid
    w = np.full(times.size, dt)
    w[0] = w[-1] = 0.5 * dt

    safe_rho = np.where(rho > 0.0, rho, 1.0)
    ratio = np.where(rho > 0.0, 1.0 / safe_rho, 0.0)
    weighted = []  # P_i[:, j] = w_j f_i(t_j) g_i(rho[:, j])
    for f, t_end, g in F.pairs:
        fvals = np.where(times <= t_end + 1e-12, np.asarray(f(times), dtype=float), 0.0)
        weighted.append((w * fvals)[None, :] * np.asarray(g(rho), dtype=float))

    # sum over index tuples, split by the position of the maximal time index:
    # prod_i (S_i(<j) + P_ij) - prod_i S_i(<j) collects exactly the tuples
    # whose maximum equals j.
    prefixes = []
    for P in weighted:
        S = np.zeros_like(P)
        S[:, 1:] = np.cumsum(P, axis=1)[:, :-1]
        prefixes.append(S)
    with_j = np.ones_like(rho)
    without_j = np.ones_like(rho)
    for P, S in zip(weighted, prefixes):
        with_j *= S + P
        without_j *= S
    per_path = np.sum((with_j - without_j) * ratio * H, axis=1)

    return float(per_path.mean()), float(per_path.std(ddof=1) / math.sqrt(n_bessel))


# ---------------------------------------------------------------------------
# Bessel semigroup diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BesselCheckReport:
    t: float
    x: float
    bin_edges: np.ndarray
    empirical: np.ndarray
    exact: np.ndarray
    sup_deviation: float
    se_max: float

    @property
    def ok(self) -> bool:
        return self.sup_deviation < 3.0 * self.se_max


def _entrance_bin_probs(edges: np.ndarray, t: float) -> np.ndarray:
    """Bin masses of the entrance density 2 kappa(t) y^2 exp(-y^2 / (2t))."""
    from scipy.stats import maxwell

    cdf = maxwell.cdf(edges, scale=math.sqrt(t))
    return np.diff(cdf)


def _htransform_bin_probs(edges: np.ndarray, t: float, x: float) -> np.ndarray:
    """Bin masses of x^-1 y (phi_t(y - x) - phi_t(y + x)) dy, in closed form."""
    from scipy.stats import norm

    s = math.sqrt(t)

    def piece(a, b, shift, sign):
        # ∫_a^b y phi_t(y + shift) dy = t (phi(a+shift) - phi(b+shift)) - shift (Phi(b+shift)-Phi(a+shift))
        return t * (norm.pdf(a + shift, scale=s) - norm.pdf(b + shift, scale=s)) - shift * (
            norm.cdf(b + shift, scale=s) - norm.cdf(a + shift, scale=s)
        )

    a, b = edges[:-1], edges[1:]
    return (piece(a, b, -x, +1) - piece(a, b, +x, -1)) / x


def bessel_semigroup_check(
    t: float,
    x: float,
    n_samples: int,
    seed,
    n_bins: int = 24,
) -> BesselCheckReport:
    """Histogram of the 3-d Bessel marginal at time t against its stated density.

    Started at x > 0 the marginal is the h-transform x^-1 Q_t(x, dy) y of
    killed Brownian motion (reflection-principle kernel); started at 0 it is
    the entrance law 2 kappa(t) y^2 exp(-y^2/(2t)) dy.  The marginal is drawn
    exactly as the norm of a shifted 3-d Gaussian.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    rng = np.random.default_rng(seed)
    samples = np.linalg.norm(
        np.array([x, 0.0, 0.0]) + rng.standard_normal((n_samples, 3)) * math.sqrt(t), axis=1
    )
    y_max = x + 4.5 * math.sqrt(t)
    edges = np.linspace(0.0, y_max, n_bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    empirical = counts / n_samples
    exact = _entrance_bin_probs(edges, t) if x == 0.0 else _htransform_bin_probs(edges, t, x)
    se = np.sqrt(np.clip(exact * (1.0 - exact), 0.0, None) / n_samples)
    return BesselCheckReport(
        t=t,
        x=x,
        bin_edges=edges,
        empirical=empirical,
        exact=exact,
        sup_deviation=float(np.max(np.abs(empirical - exact))),
        se_max=float(se.max()),
    )


# ---------------------------------------------------------------------------
# Ready-made ingredient functions (numpy-vectorized)
# ---------------------------------------------------------------------------


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def step_indicator(threshold: float, width: float = 0.0) -> Callable:
    """1_{r > threshold}, optionally C^1-smoothed over [threshold, threshold + width]."""
    if width <= 0.0:
        return lambda r: np.where(np.asarray(r, dtype=float) > threshold, 1.0, 0.0)
    return lambda r: smoothstep((np.asarray(r, dtype=float) - threshold) / width)


def smoothed_cutoff(start: float, width: float) -> Callable:
    """1 on [0, start], C^1 decay to 0 on [start, start + width], 0 after."""
    return lambda r: 1.0 - smoothstep((np.asarray(r, dtype=float) - start) / width)


def smoothed_bump(a: float, b: float, width: float) -> Callable:
    """C^1 bump: 0 outside [a, b], 1 on [a + width, b - width]."""
    if b - a <= 2.0 * width:
        raise ValueError("bump too narrow for the requested shoulder width")

    def fn(tvals):
        tvals = np.asarray(tvals, dtype=float)
        return smoothstep((tvals - a) / width) * (1.0 - smoothstep((tvals - (b - width)) / width))

    return fn

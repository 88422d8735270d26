"""Monotone-cutoff variational problems: explicit near-minimizers and a brute-force oracle.

The main object is the one-dimensional functional

    Phi(l) = sum_i ( int_tau^delta |l'(s)|^alpha_i |f_i(s)|^p_i ds )^(1/p_i)

over nonincreasing profiles with l(tau) = 1, l(delta) = 0.  The infimum over
C^1 profiles is approached by monotone piecewise-linear profiles (the
functional only sees per-interval slopes), so the oracle minimizes over knot
values by projected coordinate descent from many feasible starts.  The
explicit construction integrates ``g^(-theta)`` with ``g = f + eps`` built
exactly as in the underlying proof (no mollification step: sampled profiles
are already piecewise smooth).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import mixed_norms as mn
from .mixed_norms import GridFunction, MixedNormSpec

__all__ = [
    "FeasibilityError",
    "IterationHypothesisError",
    "CutoffProfile",
    "VariationalProblem",
    "functional_value",
    "explicit_cutoff",
    "brute_force_infimum",
    "sa3_exponent",
    "sa3_bound_report",
    "sa3_gap_sweep",
    "calibrate_sa3_constant",
    "step1_bound",
    "radial_embedding_infimum",
    "iteration_lemma_constant",
    "iteration_lemma_check",
    "random_feasible_profiles",
    "profile_to_csv",
]


class FeasibilityError(ValueError):
    """Profile violates the cutoff constraints (endpoints, monotonicity, range)."""


class IterationHypothesisError(ValueError):
    """The pairwise hypothesis of the iteration lemma fails on the sample grid."""


@dataclass(frozen=True)
class CutoffProfile:
    """Piecewise-linear nonincreasing profile on [tau, delta] with l(tau)=1, l(delta)=0."""

    tau: float
    delta: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if self.delta <= self.tau:
            raise FeasibilityError("need tau < delta")
        if v.ndim != 1 or v.size < 2:
            raise FeasibilityError("profile needs at least two knots")
        if abs(v[0] - 1.0) > 1e-12 or abs(v[-1]) > 1e-12:
            raise FeasibilityError("profile must run from 1 at tau to 0 at delta")
        if np.any(np.diff(v) > 1e-12):
            raise FeasibilityError("profile must be nonincreasing")
        if v.min() < -1e-12 or v.max() > 1 + 1e-12:
            raise FeasibilityError("profile values must lie in [0, 1]")

    @property
    def knots(self) -> np.ndarray:
        return np.linspace(self.tau, self.delta, self.values.size)

    @property
    def h(self) -> float:
        return (self.delta - self.tau) / (self.values.size - 1)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.h

    def __call__(self, s) -> np.ndarray:
        return np.interp(s, self.knots, self.values)

    def resampled(self, n_knots: int) -> "CutoffProfile":
        knots = np.linspace(self.tau, self.delta, n_knots)
        vals = np.interp(knots, self.knots, self.values)
        vals[0], vals[-1] = 1.0, 0.0
        return CutoffProfile(self.tau, self.delta, vals)


def linear_profile(tau: float, delta: float, n_knots: int = 65) -> CutoffProfile:
    return CutoffProfile(tau, delta, np.linspace(1.0, 0.0, n_knots))


@dataclass(frozen=True)
class VariationalProblem:
    """Sampled data of the cutoff functional: N <= 4 components on [tau, delta].

    ``f_samples`` holds the component densities at ``m`` equispaced points
    spanning [tau, delta] inclusive; evaluation in between is linear.
    """

    tau: float
    delta: float
    alphas: np.ndarray
    ps: np.ndarray
    betas: np.ndarray
    f_samples: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        p = np.atleast_1d(np.asarray(self.ps, dtype=float))
        b = np.atleast_1d(np.asarray(self.betas, dtype=float))
        fs = np.atleast_2d(np.asarray(self.f_samples, dtype=float))
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "ps", p)
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "f_samples", fs)
        n = a.size
        if not (1 <= n <= 4):
            raise FeasibilityError(f"need 1 <= N <= 4 components, got {n}")
        if p.size != n or b.size != n or fs.shape[0] != n:
            raise FeasibilityError("alphas, ps, betas, f_samples must agree in component count")
        if np.any(a < 1) or np.any(p < 1):
            raise FeasibilityError("need alpha_i >= 1 and p_i >= 1")
        if np.any(b <= 0):
            raise FeasibilityError("need beta_i > 0")
        if np.any(fs < 0):
            raise FeasibilityError("component densities must be nonnegative")
        gap = self.delta - self.tau
        if not (0 < gap <= 1):
            raise FeasibilityError(f"need 0 < delta - tau <= 1, got {gap}")
        if fs.shape[1] < 2:
            raise FeasibilityError("need at least 2 density samples")

    @property
    def n(self) -> int:
        return self.alphas.size

    @property
    def gap(self) -> float:
        return self.delta - self.tau

    @property
    def theta(self) -> float:
        return 1.0 / float(self.alphas.min())

    def sample_grid(self) -> np.ndarray:
        return np.linspace(self.tau, self.delta, self.f_samples.shape[1])

    def f_at(self, i: int, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.sample_grid(), self.f_samples[i])


def problem_from_callables(tau, delta, alphas, ps, betas, f_fns, m: int = 257) -> VariationalProblem:
    grid = np.linspace(tau, delta, m)
    samples = np.stack([np.asarray(fn(grid), dtype=float) for fn in np.atleast_1d(f_fns)])
    return VariationalProblem(tau, delta, alphas, ps, betas, samples)


def _interval_weights(prob: VariationalProblem, knots: np.ndarray) -> np.ndarray:
    """w[i, k] = h * f_i(midpoint_k)^p_i for the knot intervals."""
    mids = 0.5 * (knots[:-1] + knots[1:])
    h = knots[1] - knots[0]
    return np.stack([prob.f_at(i, mids) ** prob.ps[i] * h for i in range(prob.n)])


def functional_value(prob: VariationalProblem, ell: CutoffProfile) -> float:
    """Quadrature value of the cutoff functional at a feasible profile."""
    if abs(ell.tau - prob.tau) > 1e-12 or abs(ell.delta - prob.delta) > 1e-12:
        raise FeasibilityError("profile interval does not match the problem interval")
    w = _interval_weights(prob, ell.knots)
    sl = np.abs(ell.slopes())
    total = 0.0
    for i in range(prob.n):
        total += float((sl ** prob.alphas[i] @ w[i]) ** (1.0 / prob.ps[i]))
    return total


def explicit_cutoff(prob: VariationalProblem, n_knots: int = 129) -> CutoffProfile:
    """Closed-form near-minimizer: the normalized tail integral of g^(-theta).

    ``g = F + eps`` with ``F = sum_i f_i^p`` (p the largest p_i),
    ``eps = ((delta-tau)^(-1) int F^beta)^(1/beta)`` (beta the smallest
    beta_i) and ``theta = 1/min alpha_i``.  Constant data gives exactly the
    linear profile; an all-zero density also falls back to it.
    """
    knots = np.linspace(prob.tau, prob.delta, n_knots)
    mids = 0.5 * (knots[:-1] + knots[1:])
    h = knots[1] - knots[0]
    p = float(prob.ps.max())
    beta = float(prob.betas.min())
    F = np.zeros_like(mids)
    for i in range(prob.n):
        F += prob.f_at(i, mids) ** p
    eps = (np.mean(F**beta)) ** (1.0 / beta)
    if eps == 0.0:
        return linear_profile(prob.tau, prob.delta, n_knots)
    g = F + eps
    dens = g ** (-prob.theta)
    tail = np.concatenate([np.cumsum(dens[::-1])[::-1] * h, [0.0]])
    vals = tail / tail[0]
    vals[0], vals[-1] = 1.0, 0.0
    return CutoffProfile(prob.tau, prob.delta, np.minimum.accumulate(vals))


def random_feasible_profiles(tau, delta, n_knots, count, seed) -> list[CutoffProfile]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        interior = np.sort(rng.uniform(0.0, 1.0, size=n_knots - 2))[::-1]
        vals = np.concatenate([[1.0], interior, [0.0]])
        out.append(CutoffProfile(tau, delta, vals))
    return out


def _objective(T: np.ndarray, inv_p: np.ndarray) -> np.ndarray:
    # T: (N, ...) inner sums; objective = sum_i T_i^(1/p_i)
    return sum(T[i] ** inv_p[i] for i in range(T.shape[0]))


def brute_force_infimum(
    prob: VariationalProblem,
    knot_count: int = 41,
    n_starts: int = 20,
    seed: int = 20250809,
    max_sweeps: int = 80,
    n_candidates: int = 15,
) -> tuple[float, CutoffProfile]:
    """Oracle infimum by projected coordinate descent over feasible knot values.

    Runs ``n_starts`` random feasible starts plus the explicit construction
    (so the result never exceeds the explicit value), updating one interior
    knot at a time over a candidate grid within its monotonicity bounds.  The
    problem is non-convex for mixed exponents; multi-start with a fixed seed
    trades exhaustiveness for reproducibility.
    """
    if knot_count > 400:
        raise FeasibilityError("knot_count capped at 400")
    K = knot_count - 1  # intervals
    knots = np.linspace(prob.tau, prob.delta, knot_count)
    h = knots[1] - knots[0]
    w = _interval_weights(prob, knots)  # (N, K)
    alphas = prob.alphas
    inv_p = 1.0 / prob.ps

    starts = random_feasible_profiles(prob.tau, prob.delta, knot_count, n_starts, seed)
    starts.append(explicit_cutoff(prob).resampled(knot_count))
    starts.append(linear_profile(prob.tau, prob.delta, knot_count))
    # informed extras: the exact single-component minimizer (slopes ~ w^(-1/(a-1)))
    # per component, and slope concentrations at the lightest interval
    for i in range(prob.n):
        if prob.alphas[i] > 1.01:
            with np.errstate(over="ignore", divide="ignore"):
                dens = np.clip(w[i], 1e-300, None) ** (-1.0 / (prob.alphas[i] - 1.0))
            tail = np.concatenate([np.cumsum(dens[::-1])[::-1], [0.0]])
            if not (np.all(np.isfinite(tail)) and tail[0] > 0):
                continue
            vals = np.minimum.accumulate(np.clip(tail / tail[0], 0.0, 1.0))
            vals[0], vals[-1] = 1.0, 0.0
            starts.append(CutoffProfile(prob.tau, prob.delta, vals))
    k_star = int(np.argmin(w.sum(axis=0)))
    for k_conc in {0, k_star, K - 1}:
        vals = np.concatenate([np.ones(k_conc + 1), np.zeros(K - k_conc)])
        starts.append(CutoffProfile(prob.tau, prob.delta, vals))
    V = np.stack([s.values for s in starts])  # (S, K+1)
    S = V.shape[0]

    slopes = np.abs(np.diff(V, axis=1)) / h  # (S, K)
    T = np.stack([(slopes ** alphas[i]) @ w[i] for i in range(prob.n)])  # (N, S)
    obj = _objective(T, inv_p)
    grid = np.linspace(0.0, 1.0, n_candidates)

    def update_knot(j, T, obj):
        lo, hi = V[:, j + 1], V[:, j - 1]
        w_left = w[:, j - 1][:, None, None]  # (N,1,1)
        w_right = w[:, j][:, None, None]
        old = np.stack(
            [
                (np.abs(V[:, j] - V[:, j - 1]) / h) ** alphas[i] * w[i, j - 1]
                + (np.abs(V[:, j + 1] - V[:, j]) / h) ** alphas[i] * w[i, j]
                for i in range(prob.n)
            ]
        )  # (N, S)
        for zoom in range(2):
            if zoom == 0:
                C = lo[:, None] + (hi - lo)[:, None] * grid[None, :]
            else:
                span = (hi - lo) / (n_candidates - 1)
                C = V[:, j][:, None] + span[:, None] * np.linspace(-1, 1, n_candidates)[None, :]
                C = np.clip(C, lo[:, None], hi[:, None])
            C[:, 0] = V[:, j]  # keep the incumbent: never worsen
            s_left = (np.abs(C - V[:, j - 1][:, None]) / h)[None]  # (1,S,M)
            s_right = (np.abs(V[:, j + 1][:, None] - C) / h)[None]
            new = s_left ** alphas[:, None, None] * w_left + s_right ** alphas[:, None, None] * w_right
            T_new = T[:, :, None] - old[:, :, None] + new  # (N,S,M)
            cand_obj = _objective(np.maximum(T_new, 0.0), inv_p)  # (S,M)
            pick = np.argmin(cand_obj, axis=1)
            rows = np.arange(S)
            V[:, j] = C[rows, pick]
            T = np.maximum(T_new[:, rows, pick], 0.0)
            old = np.stack(
                [
                    (np.abs(V[:, j] - V[:, j - 1]) / h) ** alphas[i] * w[i, j - 1]
                    + (np.abs(V[:, j + 1] - V[:, j]) / h) ** alphas[i] * w[i, j]
                    for i in range(prob.n)
                ]
            )
            obj = cand_obj[rows, pick]
        return T, obj

    for _ in range(max_sweeps):
        prev = obj.copy()
        for j in range(1, K):
            T, obj = update_knot(j, T, obj)
        if np.max(prev - obj) < 1e-12 * (1.0 + np.abs(obj).max()):
            break

    obj = np.where(np.isfinite(obj), obj, np.inf)
    best = int(np.argmin(obj))
    vals = V[best]
    vals[0], vals[-1] = 1.0, 0.0
    profile = CutoffProfile(prob.tau, prob.delta, np.minimum.accumulate(np.clip(vals, 0, 1)))
    value = functional_value(prob, profile)
    exp_prof = explicit_cutoff(prob).resampled(knot_count)
    exp_val = functional_value(prob, exp_prof)
    if not math.isfinite(value) or exp_val < value:
        value, profile = exp_val, exp_prof
    return value, profile


def sa3_exponent(alphas, ps, betas) -> float:
    """Predicted gap power: ``max_i (alpha_i - 1)/p_i + 1/min_i beta_i``."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    ps = np.atleast_1d(np.asarray(ps, dtype=float))
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    return float(((alphas - 1) / ps).max() + 1.0 / betas.min())


def _data_term(prob: VariationalProblem) -> float:
    grid = prob.sample_grid()
    total = 0.0
    for i in range(prob.n):
        total += float(np.trapezoid(prob.f_samples[i] ** prob.betas[i], grid) ** (1.0 / prob.betas[i]))
    return total


_SA3_CACHE: dict = {}

SA3_MARGIN = 1.5


def calibrate_sa3_constant(alphas, ps, betas, seed: int = 20250809, knot_count: int = 41) -> dict:
    """Empirical constant for the variational upper bound, per exponent signature.

    Max of lhs / ((gap)^(-exponent) * data term) over a frozen family of
    densities and gaps, times the recorded margin.  Cached.
    """
    key = (tuple(np.atleast_1d(alphas)), tuple(np.atleast_1d(ps)), tuple(np.atleast_1d(betas)),
           seed, knot_count)
    if key in _SA3_CACHE:
        return _SA3_CACHE[key]
    rng = np.random.default_rng(seed)
    n = np.atleast_1d(alphas).size
    expo = sa3_exponent(alphas, ps, betas)
    raw = 0.0
    for gap in (1.0, 0.25):
        for _ in range(4):
            m = 33
            base = rng.uniform(0.0, 2.0, size=(n, 5))
            samples = np.stack([
                np.interp(np.linspace(0, 1, m), np.linspace(0, 1, 5), base[i]) for i in range(n)
            ])
            prob = VariationalProblem(0.0, gap, alphas, ps, betas, samples)
            lhs, _ = brute_force_infimum(prob, min(knot_count, 25), n_starts=3,
                                         seed=seed, n_candidates=9, max_sweeps=40)
            denom = gap ** (-expo) * _data_term(prob)
            if denom > 0:
                raw = max(raw, lhs / denom)
    result = {"raw_max": raw, "margin": SA3_MARGIN, "c_fit": SA3_MARGIN * max(raw, 1e-9)}
    _SA3_CACHE[key] = result
    return result


def sa3_bound_report(
    prob: VariationalProblem, knot_count: int = 41, c_fit: float | None = None
) -> tuple[float, float, float, float]:
    """(lhs, rhs_exponent, rhs_value, C_fit) of the variational upper bound.

    ``lhs`` is the oracle infimum, ``rhs_value = gap^(-exponent) * sum_i
    (int |f_i|^beta_i)^(1/beta_i)``; the report is meaningful through
    ``lhs <= C_fit * rhs_value``.
    """
    lhs, _ = brute_force_infimum(prob, knot_count)
    expo = sa3_exponent(prob.alphas, prob.ps, prob.betas)
    rhs_value = prob.gap ** (-expo) * _data_term(prob)
    if c_fit is None:
        c_fit = calibrate_sa3_constant(prob.alphas, prob.ps, prob.betas)["c_fit"]
    return lhs, expo, rhs_value, c_fit


def sa3_gap_sweep(alphas, ps, betas, f_fns, gaps, knot_count: int = 41) -> dict:
    """Gap sweep of the oracle infimum; slope fitted on lhs normalized by the data term.

    The raw bound's right side carries the data term's own gap power, so the
    predicted power ``-sa3_exponent`` is read off ``log(lhs / data)`` vs
    ``log(gap)``; it is tight when all beta_i coincide.
    """
    lhs_list, data_list = [], []
    for gap in gaps:
        prob = problem_from_callables(0.0, gap, alphas, ps, betas, f_fns)
        lhs, _ = brute_force_infimum(prob, knot_count)
        lhs_list.append(lhs)
        data_list.append(_data_term(prob))
    logg = np.log(np.asarray(gaps))
    ratio = np.log(np.asarray(lhs_list) / np.asarray(data_list))
    slope = float(np.polyfit(logg, ratio, 1)[0])
    return {
        "gaps": list(gaps),
        "lhs": lhs_list,
        "data": data_list,
        "slope": slope,
        "predicted": -sa3_exponent(alphas, ps, betas),
    }


def step1_bound(prob: VariationalProblem, beta: float) -> float:
    """Closed-form upper bound for the common-density form of the functional.

    Valid for problems with p_i = 1 and all components sharing one density f:
    ``sum_i 2^(theta alpha_i / beta) gap^(1 - alpha_i - 1/beta) (int f^beta)^(1/beta)``.
    """
    if np.any(prob.ps != 1.0):
        raise FeasibilityError("the closed-form bound applies to the p_i = 1 form")
    grid = prob.sample_grid()
    f = prob.f_samples[0]
    if not np.allclose(prob.f_samples, f[None]):
        raise FeasibilityError("the closed-form bound needs a common density")
    integral = np.trapezoid(f**beta, grid) ** (1.0 / beta)
    theta = prob.theta
    gap = prob.gap
    return float(
        sum(2 ** (theta * a / beta) * gap ** (1.0 - a - 1.0 / beta) for a in prob.alphas) * integral
    )


# ---------------------------------------------------------------------------
# radial embedding at desk scale (d = 2)
# ---------------------------------------------------------------------------


def radial_embedding_infimum(
    w: GridFunction,
    alpha: float,
    p: float,
    q: float,
    kappa: float,
    theta: float,
    tau: float,
    delta: float,
    radial_knots: int = 65,
    gamma: float = 1.0,
    n_angles: int = 256,
) -> tuple[float, float]:
    """Radial-cutoff embedding functional and its gap-weighted right side (d = 2).

    Reduces ``inf_eta ||w |grad eta|^alpha||`` over radial cutoffs
    ``eta(x) = l(|x|)`` to a 1-D monotone-profile problem via circular shell
    quadrature of ``F(x) = ||w(., x)||_(L^q)``, then brute-forces the profile.
    Returns ``(J, (delta - tau)^(-gamma) * (||grad w||^theta ||w||^(1-theta) +
    ||w||))`` with norms over ``I x B_delta`` in the space-outer (kappa, q)
    ordering.  Requires ``1/kappa = 1/p + theta/(d-1)`` and ``alpha * p >= 1``.
    """
    if w.d != 2:
        raise FeasibilityError("the radial reduction is implemented at desk scale d = 2")
    if not (1.0 <= tau < delta <= 2.0):
        raise FeasibilityError("need 1 <= tau < delta <= 2")
    if abs(1.0 / kappa - (1.0 / p + theta / (w.d - 1))) > 1e-12:
        raise FeasibilityError("exponent relation 1/kappa = 1/p + theta/(d-1) violated")
    if alpha * p < 1:
        raise FeasibilityError("need alpha * p >= 1")
    if not np.any(w.values):
        return 0.0, 0.0

    # F(x) = time q-norm per cell
    F = mn._reduce(w.values, q, w.dt, 0)
    # shell quadrature G(s) = s * int_angles F(s w)^p dtheta, sampled at the knots
    knots = np.linspace(tau, delta, radial_knots)
    angles = np.linspace(0.0, 2 * math.pi, n_angles, endpoint=False)
    circle = np.stack([np.cos(angles), np.sin(angles)])
    coords = []
    for k in range(2):
        pts = knots[:, None] * circle[k][None, :]
        coords.append((pts - (w.x0[k] + 0.5 * w.dx[k])) / w.dx[k])
    Fvals = ndimage.map_coordinates(F, np.stack(coords).reshape(2, -1), order=1, mode="constant")
    Fvals = Fvals.reshape(len(knots), n_angles)
    G = knots * (Fvals**p).mean(axis=1) * 2 * math.pi

    prob = VariationalProblem(tau, delta, [alpha * p], [p], [kappa], (G ** (1.0 / p))[None])
    J, _ = brute_force_infimum(prob, radial_knots)

    X = w.meshgrid()
    ball = ((X**2).sum(axis=-1) <= delta**2 * (1 + 1e-12)).astype(float)
    spec = MixedNormSpec(kappa, q, "space-outer")
    wn = mn.mixed_norm_masked(w, spec, None, ball)
    gn = mn.mixed_norm_masked(mn.gradient_magnitude(w), spec, None, ball)
    rhs = (delta - tau) ** (-gamma) * (gn**theta * wn ** (1.0 - theta) + wn)
    return float(J), float(rhs)


# ---------------------------------------------------------------------------
# iteration lemma
# ---------------------------------------------------------------------------


def iteration_lemma_constant(alpha: float, theta: float) -> float:
    """Explicit constant of the geometric-refinement absorption argument.

    For alpha > 0: ``C = 2 (1 - lam)^(-alpha) / (1 - theta)`` with
    ``lam = (2 theta / (1 + theta))^(1/alpha)`` (so that theta * lam^(-alpha)
    = (1 + theta)/2 < 1).  For alpha = 0 the telescoping gives
    ``C = 1/(1 - theta)``.
    """
    if not 0.0 < theta < 1.0:
        raise IterationHypothesisError("theta must lie in (0, 1)")
    if alpha < 0:
        raise IterationHypothesisError("alpha must be >= 0")
    if alpha == 0.0:
        return 1.0 / (1.0 - theta)
    lam = (2.0 * theta / (1.0 + theta)) ** (1.0 / alpha)
    return 2.0 * (1.0 - lam) ** (-alpha) / (1.0 - theta)


def iteration_lemma_check(
    tau_grid, h_values, alpha: float, theta: float, A: float, B: float
) -> bool:
    """Verify the absorbed conclusion ``h(tau1) <= C(alpha, theta) (gap^(-alpha) A + B)``.

    First checks the pairwise hypothesis ``h(t) <= theta h(t') +
    (t'-t)^(-alpha) A + B`` on every grid pair (raising
    IterationHypothesisError on failure, which is not a conclusion failure),
    then evaluates the conclusion with the explicit constant.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    h = np.asarray(h_values, dtype=float)
    if tau_grid.ndim != 1 or tau_grid.size != h.size or tau_grid.size < 2:
        raise IterationHypothesisError("tau grid and samples must match, with >= 2 points")
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise IterationHypothesisError("h must be nonnegative and bounded")
    if A < 0 or B < 0:
        raise IterationHypothesisError("A, B must be nonnegative")
    n = tau_grid.size
    for i in range(n):
        for j in range(i + 1, n):
            gap = tau_grid[j] - tau_grid[i]
            bound = theta * h[j] + gap ** (-alpha) * A + B
            if h[i] > bound * (1 + 1e-12) + 1e-300:
                raise IterationHypothesisError(
                    f"hypothesis fails at pair ({tau_grid[i]}, {tau_grid[j]})")
    C = iteration_lemma_constant(alpha, theta)
    total_gap = tau_grid[-1] - tau_grid[0]
    return bool(h[0] <= C * (total_gap ** (-alpha) * A + B) * (1 + 1e-12))


def profile_to_csv(profile: CutoffProfile, path) -> None:
    """Two-column CSV export: knot, value."""
    arr = np.column_stack([profile.knots, profile.values])
    np.savetxt(path, arr, delimiter=",", header="knot,value", comments="")

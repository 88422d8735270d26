"""Conservative finite-difference solver for div-form parabolic equations.

Solves ``du/dt = div(a grad u) + b . grad u + f`` with possibly degenerate
symmetric PSD ``a``.  The spatial operator is the conservative flux-difference
form with arithmetically face-averaged diagonal coefficients (zero flux where
``a`` vanishes, no regularization) and centered cross-differences for the
off-diagonal entries; drift is first-order upwind per component sign, applied
explicitly under a CFL guard; diffusion is implicit (unconditionally stable
under degeneracy).

Boundary handling: ``periodic`` wraps; ``zero-extension`` imposes the
homogeneous value at the box walls through odd-mirror ghost cells, which keeps
the wall condition second order (a literal outside-cell zero would move the
effective boundary by dx/2).

Comparison/positivity structure holds for diagonal ``a`` (M-matrix plus
upwinding); off-diagonal support exists but is excluded from those guarantees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from . import cutoffs, mixed_norms as mn
from .embeddings import B1_MUST_VANISH, ExponentConfig, check_Re01, check_Re1
from .mixed_norms import INF, GridFunction, MixedNormSpec

__all__ = [
    "CoefficientError",
    "SolverConfigError",
    "SolverError",
    "TestBankError",
    "CoefficientField",
    "EllipticityProfile",
    "SolverConfig",
    "HypothesisReport",
    "MaxPrincipleReport",
    "identity_field",
    "diagonal_power_field",
    "example_61_field",
    "example_62_field",
    "rotation_drift_field",
    "tabulated_diagonal_field",
    "build_field",
    "PDE_FIXTURES",
    "spatial_initial_condition",
    "ellipticity_profiles",
    "mu_distortion_bruteforce",
    "check_hypotheses",
    "discrete_divergence",
    "solve",
    "weak_residual",
    "steklov_mean",
    "max_principle_report",
]


class CoefficientError(ValueError):
    """Coefficient field violates symmetry/PSD requirements at a sample."""


class SolverConfigError(ValueError):
    """Invalid step sizes, CFL violation, or tolerance out of contract."""


class SolverError(RuntimeError):
    """The implicit linear solve failed to reach the residual tolerance."""


class TestBankError(ValueError):
    """A weak-form test function touches the boundary of the domain."""


@dataclass
class CoefficientField:
    """Evaluators for the equation data.

    ``a(t, X) -> (..., d, d)`` symmetric PSD; optional fast path ``a_diag``
    for diagonal fields.  ``b1``/``b2`` map ``(t, X) -> (..., d)``; ``forcing``
    maps ``(t, X) -> (...)``.  ``exponents`` carries the declared
    integrability indices used by the hypothesis checks.
    """

    name: str
    d: int
    a: Callable
    a_diag: Callable | None = None
    b1: Callable | None = None
    b2: Callable | None = None
    forcing: Callable | None = None
    exponents: ExponentConfig | None = None
    time_dependent: bool = False
    params: dict = dc_field(default_factory=dict)

    def b_total(self, t, X):
        out = np.zeros(X.shape[:-1] + (self.d,))
        if self.b1 is not None:
            out += self.b1(t, X)
        if self.b2 is not None:
            out += self.b2(t, X)
        return out

    def a_matrix(self, t, X):
        if self.a is not None:
            return self.a(t, X)
        diag = self.a_diag(t, X)
        out = np.zeros(diag.shape + (self.d,))
        for k in range(self.d):
            out[..., k, k] = diag[..., k]
        return out

    def a_diagonal(self, t, X):
        if self.a_diag is not None:
            return self.a_diag(t, X)
        A = self.a(t, X)
        return np.stack([A[..., k, k] for k in range(self.d)], axis=-1)

    @property
    def is_diagonal(self) -> bool:
        return self.a_diag is not None and self.a is None

    def with_forcing(self, forcing) -> "CoefficientField":
        return CoefficientField(self.name, self.d, self.a, self.a_diag, self.b1, self.b2,
                                forcing, self.exponents, self.time_dependent, dict(self.params))


# ---------------------------------------------------------------------------
# builtin coefficient families
# ---------------------------------------------------------------------------


def identity_field(d: int, forcing=None) -> CoefficientField:
    def a_diag(t, X):
        return np.ones(X.shape[:-1] + (d,))

    return CoefficientField("identity", d, None, a_diag, forcing=forcing)


def diagonal_power_field(d: int, alpha: float, R: float = 1.0, n: float = INF,
                         forcing=None) -> CoefficientField:
    """Each diagonal entry is the truncated power of its own coordinate squared."""
    fam = cutoffs.CutoffFamily(R, alpha, n)

    def a_diag(t, X):
        return fam.f_n(X**2)

    return CoefficientField("diagonal-power", d, None, a_diag, forcing=forcing,
                            params={"alpha": alpha, "R": R, "n": n})


def example_61_field(d: int = 3, alpha: float = 0.3, R: float = 2.0, n: float = INF,
                     forcing=None) -> CoefficientField:
    """Isotropic singular family ``a = f_(R,n)^(-alpha)(|x|^2) I`` (needs d >= 3)."""
    if d < 3:
        raise CoefficientError("the isotropic singular family requires d >= 3")
    hi = min(d / 2 - 1, 0.5 + 1.0 / (d - 1))
    if not 0 < alpha < hi:
        raise CoefficientError(
            f"requires 0 < alpha < min(d/2 - 1, 1/2 + 1/(d-1)) = {hi}, got {alpha}")
    fam = cutoffs.CutoffFamily(R, -alpha, n)

    def a_diag(t, X):
        scalar = fam.f_n((X**2).sum(axis=-1))
        return np.repeat(scalar[..., None], d, axis=-1)

    return CoefficientField("example-6.1", d, None, a_diag, forcing=forcing,
                            params={"alpha": alpha, "R": R, "n": n})


def example_62_field(alpha: float = 0.2, R: float = 1.0, n: float = INF,
                     forcing=None) -> CoefficientField:
    """Planar degenerate family ``a = diag(f^(alpha)(x2^2), f^(alpha)(x1^2))``."""
    if not 0 < alpha < 0.25:
        raise CoefficientError(f"requires d = 2 and 0 < alpha < 1/4, got alpha = {alpha}")
    fam = cutoffs.CutoffFamily(R, alpha, n)

    def a_diag(t, X):
        return np.stack([fam.f_n(X[..., 1] ** 2), fam.f_n(X[..., 0] ** 2)], axis=-1)

    return CoefficientField("example-6.2", 2, None, a_diag, forcing=forcing,
                            params={"alpha": alpha, "R": R, "n": n})


def rotation_drift_field(pure: bool = True, chi_radius: float = 3.0, forcing=None) -> CoefficientField:
    """Unit diffusion with the divergence-free planar rotation drift (-x2, x1).

    ``pure=True`` uses the raw rotation (discrete divergence exactly zero);
    otherwise a radial plateau cutoff at ``chi_radius`` bounds the field for
    periodic boxes (divergence-free analytically, O(dx^2) discretely).
    """

    def a_diag(t, X):
        return np.ones(X.shape[:-1] + (2,))

    def b2(t, X):
        rot = np.stack([-X[..., 1], X[..., 0]], axis=-1)
        if pure:
            return rot
        r2 = (X**2).sum(axis=-1)
        chi = np.exp(-((r2 / chi_radius**2) ** 4))
        return rot * chi[..., None]

    return CoefficientField("rotation-drift", 2, None, a_diag, b2=b2, forcing=forcing,
                            params={"pure": pure, "chi_radius": chi_radius})


def tabulated_diagonal_field(diag_entries: list[GridFunction], forcing=None) -> CoefficientField:
    """Diagonal field read off stored grids (nearest-cell lookup, edge clamped)."""
    d = len(diag_entries)

    def lookup(g: GridFunction, t, X):
        it = int(np.clip(math.floor((t - g.t0) / g.dt), 0, g.nt - 1))
        idx = []
        for k in range(g.d):
            ik = np.clip(np.floor((X[..., k] - g.x0[k]) / g.dx[k]).astype(int), 0, g.nx[k] - 1)
            idx.append(ik)
        return g.values[(it,) + tuple(idx)]

    def a_diag(t, X):
        return np.stack([lookup(g, t, X) for g in diag_entries], axis=-1)

    return CoefficientField("tabulated", d, None, a_diag, forcing=forcing)


PDE_FIXTURES = {
    "identity": {"builder": identity_field, "condition": "d in {1,2,3}"},
    "diagonal-power": {"builder": diagonal_power_field,
                       "condition": "alpha real, R >= 1, n >= 1 or inf"},
    "example-6.1": {"builder": example_61_field,
                    "condition": "d >= 3, 0 < alpha < min(d/2 - 1, 1/2 + 1/(d-1))"},
    "example-6.2": {"builder": example_62_field, "condition": "d = 2, 0 < alpha < 1/4"},
    "rotation-drift": {"builder": rotation_drift_field, "condition": "d = 2, div b = 0"},
}


def build_field(name: str, **params) -> CoefficientField:
    if name not in PDE_FIXTURES:
        raise CoefficientError(f"unknown coefficient family {name!r}; "
                               f"known: {sorted(PDE_FIXTURES)}")
    return PDE_FIXTURES[name]["builder"](**params)


def spatial_initial_condition(values_or_fn, box, nx, boundary="periodic") -> GridFunction:
    """Initial data wrapped as a (degenerate) space-time grid; only slice 0 is read."""
    nx = tuple(int(n) for n in np.atleast_1d(nx))
    box = [(float(lo), float(hi)) for lo, hi in box]
    x0 = tuple(lo for lo, _ in box)
    dx = tuple((hi - lo) / n for (lo, hi), n in zip(box, nx))
    if callable(values_or_fn):
        axes = [lo + (np.arange(n) + 0.5) * h for (lo, _), n, h in zip(box, nx, dx)]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(values_or_fn(X), dtype=float)
    else:
        vals = np.asarray(values_or_fn, dtype=float)
    return GridFunction(0.0, 1.0, x0, dx, np.stack([vals, vals]), boundary)


# ---------------------------------------------------------------------------
# ellipticity profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EllipticityProfile:
    x0: tuple
    dx: tuple
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        bad = (self.lam > 0) & (self.lam > self.mu * (1 + 1e-12))
        if np.any(bad):
            raise CoefficientError("profile violates 0 <= lambda <= mu")


def _mesh(x0, dx, nx):
    axes = [x0[k] + (np.arange(nx[k]) + 0.5) * dx[k] for k in range(len(nx))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _unit_sphere_grid(d: int, n: int, rng=None) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        ang = np.linspace(0, 2 * math.pi, n, endpoint=False)
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # Fibonacci sphere
    i = np.arange(n) + 0.5
    phi = math.pi * (1 + 5**0.5) * i
    z = 1 - 2 * i / n
    r = np.sqrt(np.maximum(1 - z**2, 0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def mu_distortion_bruteforce(A: np.ndarray, n_xi: int = 10000, refine: bool = True) -> float:
    """Max of |A xi|^2 / (xi . A xi) over the unit sphere, grid plus local refine."""
    d = A.shape[0]
    xis = _unit_sphere_grid(d, n_xi)
    evals, evecs = np.linalg.eigh(A)
    if refine:
        xis = np.concatenate([xis, evecs.T])

    def ratio(v):
        Av = v @ A.T
        quad = (v * Av).sum(axis=1)
        num = (Av**2).sum(axis=1)
        out = np.where(quad > 1e-300, num / np.maximum(quad, 1e-300), 0.0)
        return out

    best = ratio(xis).max()
    if refine:
        # local perturbations around the best eigendirection
        v0 = evecs[:, np.argmax(evals)]
        rng = np.random.default_rng(0)
        pert = v0[None, :] + 0.05 * rng.standard_normal((200, d))
        pert /= np.linalg.norm(pert, axis=1, keepdims=True)
        best = max(best, ratio(pert).max())
    return float(best)


def ellipticity_profiles(field: CoefficientField, x0, dx, nx, t_samples,
                         xi_check: int = 0) -> EllipticityProfile:
    """Pointwise smallest directional ellipticity and largest distortion quotient.

    ``lam(x) = inf_t lambda_min(a(t,x))``, ``mu(x) = sup_t`` of the distortion
    quotient; for symmetric PSD ``a`` the latter equals the largest eigenvalue
    (cross-checked against the xi-grid maximization when ``xi_check > 0``).
    """
    x0 = tuple(np.atleast_1d(x0).astype(float))
    dx = tuple(np.atleast_1d(dx).astype(float))
    nx = tuple(int(n) for n in np.atleast_1d(nx))
    X = _mesh(x0, dx, nx)
    lam = np.full(nx, np.inf)
    mu = np.zeros(nx)
    for t in np.atleast_1d(t_samples):
        A = field.a_matrix(t, X)
        if not np.allclose(A, np.swapaxes(A, -1, -2), atol=1e-12):
            raise CoefficientError(f"a(t={t}) is not symmetric")
        evals = np.linalg.eigvalsh(A)
        scale = np.abs(evals).max()
        if evals.min() < -1e-12 * max(scale, 1.0):
            loc = np.unravel_index(np.argmin(evals.min(axis=-1)), nx)
            raise CoefficientError(f"a not PSD at t={t}, x={X[loc]}")
        lam = np.minimum(lam, evals[..., 0])
        mu = np.maximum(mu, evals[..., -1])
        if xi_check > 0:
            flat = A.reshape(-1, field.d, field.d)
            idx = np.linspace(0, flat.shape[0] - 1, min(16, flat.shape[0])).astype(int)
            for i in idx:
                brute = mu_distortion_bruteforce(flat[i], xi_check)
                ref = np.linalg.eigvalsh(flat[i])[-1]
                if ref > 0 and abs(brute - ref) > 1e-6 * ref:
                    raise CoefficientError("distortion cross-check failed against eigenvalues")
    return EllipticityProfile(x0, dx, lam, mu)


# ---------------------------------------------------------------------------
# hypothesis report
# ---------------------------------------------------------------------------


def discrete_divergence(b_vals: np.ndarray, dx) -> np.ndarray:
    """Centered discrete divergence of a sampled vector field (one-sided at edges)."""
    d = b_vals.shape[-1]
    out = np.zeros(b_vals.shape[:-1])
    for k in range(d):
        comp = b_vals[..., k]
        g = np.gradient(comp, dx[k], axis=k, edge_order=2)
        out += g
    return out


@dataclass
class HypothesisReport:
    lam_inv_norm: float
    mu_norm: float
    b1_norm: float
    b2_norm: float
    div_b2_neg_mass: float
    pp0_ok: bool
    re1: object
    re01_ok: bool
    hyp_a_ok: bool
    lam_zero_fraction: float

    def as_dict(self) -> dict:
        d = self.__dict__.copy()
        d["re1"] = repr(self.re1) if self.re1 is B1_MUST_VANISH else self.re1
        return d


def check_hypotheses(field: CoefficientField, cfg: ExponentConfig, x0, dx, nx,
                     t_samples=(0.0,), t_span=(0.0, 1.0), nt: int = 8) -> HypothesisReport:
    """Localized-norm and predicate report for the declared exponents.

    A vanishing ellipticity on a set of cells with finite p0 shows up as an
    infinite ``lam_inv_norm`` (reported as hypothesis failure, not raised).
    """
    prof = ellipticity_profiles(field, x0, dx, nx, t_samples)
    with np.errstate(divide="ignore"):
        lam_inv = np.where(prof.lam > 0, 1.0 / np.maximum(prof.lam, 1e-300), np.inf)
    lam_inv_norm = mn.localized_spatial_norm(lam_inv, x0, dx, cfg.p0)
    mu_norm = mn.localized_spatial_norm(prof.mu, x0, dx, cfg.p1)

    def st_norm(fn, spec):
        if fn is None:
            return 0.0
        box = [(x0[k], x0[k] + dx[k] * nx[k]) for k in range(len(nx))]
        g = mn.from_callable(lambda t, X: np.linalg.norm(fn(t, X), axis=-1),
                             t_span, nt, box, nx)
        return mn.localized_norm(g, spec)

    b1_norm = st_norm(field.b1, MixedNormSpec(cfg.p2, cfg.q2, "time-outer"))
    b2_norm = st_norm(field.b2, MixedNormSpec(cfg.p3, cfg.q3, "space-outer"))

    div_neg_mass = 0.0
    if field.b2 is not None:
        X = _mesh(x0, dx, nx)
        for t in np.atleast_1d(t_samples):
            div = discrete_divergence(field.b2(t, X), dx)
            div_neg_mass = max(div_neg_mass, float(np.maximum(-div, 0.0).sum() * np.prod(dx)))

    lam_zero_fraction = float((prof.lam <= 0).mean())
    hyp_a_ok = bool(np.isfinite(lam_inv_norm) and np.isfinite(mu_norm))
    return HypothesisReport(
        lam_inv_norm=float(lam_inv_norm),
        mu_norm=float(mu_norm),
        b1_norm=float(b1_norm),
        b2_norm=float(b2_norm),
        div_b2_neg_mass=div_neg_mass,
        pp0_ok=True,  # enforced by ExponentConfig construction
        re1=check_Re1(cfg),
        re01_ok=check_Re01(cfg),
        hyp_a_ok=hyp_a_ok,
        lam_zero_fraction=lam_zero_fraction,
    )


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


@dataclass
class SolverConfig:
    dt: float
    T: float
    dx: float | None = None
    scheme: str = "implicit-diffusion+explicit-upwind-drift"
    linear_tol: float = 1e-10
    max_iter: int = 2000
    cfl_limit: float = 0.9

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0):
            raise SolverConfigError("dt and T must be positive")
        if self.linear_tol > 1e-8:
            raise SolverConfigError("linear_tol must be <= 1e-8 relative")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-8:
            raise SolverConfigError("T must be an integer number of steps")


def _shift(u: np.ndarray, axis: int, shift: int, periodic: bool) -> np.ndarray:
    """Neighbor values with boundary ghosts: wrap, or odd mirror for zero walls."""
    rolled = np.roll(u, -shift, axis=axis)
    if periodic:
        return rolled
    out = rolled.copy()
    sl = [slice(None)] * u.ndim
    if shift == 1:
        sl[axis] = -1
        edge = [slice(None)] * u.ndim
        edge[axis] = -1
        out[tuple(sl)] = -u[tuple(edge)]
    elif shift == -1:
        sl[axis] = 0
        edge = [slice(None)] * u.ndim
        edge[axis] = 0
        out[tuple(sl)] = -u[tuple(edge)]
    else:
        raise ValueError("only unit shifts supported")
    return out


class _IndexMap:
    """Composable neighbor indices with odd-mirror signs for zero walls."""

    def __init__(self, nx, periodic):
        self.nx = nx
        self.periodic = periodic
        grids = np.meshgrid(*[np.arange(n) for n in nx], indexing="ij")
        self.pos = [g.copy() for g in grids]
        self.sign = np.ones(nx)

    def step(self, axis: int, shift: int) -> "_IndexMap":
        out = _IndexMap.__new__(_IndexMap)
        out.nx = self.nx
        out.periodic = self.periodic
        out.pos = [p.copy() for p in self.pos]
        out.sign = self.sign.copy()
        p = out.pos[axis] + shift
        n = self.nx[axis]
        if self.periodic:
            out.pos[axis] = p % n
        else:
            over = p > n - 1
            under = p < 0
            p = np.where(over, 2 * n - 1 - p, p)
            p = np.where(under, -1 - p, p)
            out.sign = np.where(over | under, -out.sign, out.sign)
            out.pos[axis] = np.clip(p, 0, n - 1)
        return out

    def flat(self) -> np.ndarray:
        return np.ravel_multi_index([p.ravel() for p in self.pos], self.nx)


def _assemble_diffusion(field: CoefficientField, t: float, x0, dx, nx, periodic: bool):
    """Sparse conservative discretization of ``div(a grad .)`` (no dt factor)."""
    d = len(nx)
    N = int(np.prod(nx))
    rows, cols, data = [], [], []
    base = _IndexMap(nx, periodic)
    idx_flat = base.flat()
    diag = np.zeros(N)

    # padded cell-center coordinates per axis for ghost evaluation
    def centers(axis, pad):
        return x0[axis] + (np.arange(-pad, nx[axis] + pad) + 0.5) * dx[axis]

    # diagonal part, axis by axis (flux form on faces)
    for k in range(d):
        axes = [centers(a, 1 if a == k else 0) for a in range(d)]
        Xp = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        akk = field.a_diagonal(t, Xp)[..., k]
        sl_mid = [slice(None)] * d
        sl_mid[k] = slice(1, -1)
        a_mid = akk[tuple(sl_mid)]
        sl_up = [slice(None)] * d
        sl_up[k] = slice(2, None)
        sl_dn = [slice(None)] * d
        sl_dn[k] = slice(0, -2)
        if periodic:
            a_up = np.roll(a_mid, -1, axis=k)
        else:
            a_up = akk[tuple(sl_up)]
        g_plus = 0.5 * (a_mid + a_up) / dx[k] ** 2  # face between j and j+1 (or wall)
        nb = base.step(k, 1)
        nb_flat = nb.flat()
        nb_sign = nb.sign.ravel()
        gp = g_plus.ravel()
        if periodic:
            rows.extend([idx_flat, nb_flat])
            cols.extend([nb_flat, idx_flat])
            data.extend([gp, gp])
            diag += -gp
            minus = np.zeros(N)
            np.add.at(minus, nb_flat, gp)
            diag += -minus
        else:
            interior = np.ones(nx, dtype=bool)
            sl_last = [slice(None)] * d
            sl_last[k] = -1
            interior[tuple(sl_last)] = False
            interior = interior.ravel()
            rows.append(idx_flat[interior])
            cols.append(nb_flat[interior])
            data.append(gp[interior])
            rows.append(nb_flat[interior])
            cols.append(idx_flat[interior])
            data.append(gp[interior])
            np.add.at(diag, idx_flat[interior], -gp[interior])
            np.add.at(diag, nb_flat[interior], -gp[interior])
            # wall faces: ghost = -u_j pairs with the mirror, total -2g on the diagonal
            wall = ~interior
            np.add.at(diag, idx_flat[wall], -2.0 * gp[wall])
            a_dn = akk[tuple(sl_dn)]
            g_minus_wall = 0.5 * (a_mid + a_dn) / dx[k] ** 2
            first = np.zeros(nx, dtype=bool)
            sl_first = [slice(None)] * d
            sl_first[k] = 0
            first[tuple(sl_first)] = True
            gm = g_minus_wall.ravel()
            fm = first.ravel()
            np.add.at(diag, idx_flat[fm], -2.0 * gm[fm])

    rows.append(idx_flat)
    cols.append(idx_flat)
    data.append(diag)

    # off-diagonal cross terms (centered), only for full-matrix fields
    if not field.is_diagonal:
        X = _mesh(x0, dx, nx)
        A = field.a_matrix(t, X)
        for i in range(d):
            for k in range(d):
                if i == k:
                    continue
                for si in (1, -1):
                    mid = base.step(i, si)
                    # a_ik at the shifted cell; ghost positions evaluated directly
                    axes = [centers(a, 1 if a == i else 0) for a in range(d)]
                    Xp = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
                    Ap = field.a_matrix(t, Xp)[..., i, k]
                    sl = [slice(None)] * d
                    sl[i] = slice(1 + si, nx[i] + 1 + si) if si == 1 else slice(0, nx[i])
                    a_sh = Ap[tuple(sl)]
                    coef = si / (4.0 * dx[i] * dx[k]) * a_sh
                    for sk in (1, -1):
                        tgt = mid.step(k, sk)
                        rows.append(idx_flat)
                        cols.append(tgt.flat())
                        data.append((sk * coef * tgt.sign).ravel())

    rows = np.concatenate([np.asarray(r) for r in rows])
    cols = np.concatenate([np.asarray(c) for c in cols])
    data = np.concatenate([np.asarray(v, dtype=float) for v in data])
    return sparse.csr_matrix((data, (rows, cols)), shape=(N, N))


def _upwind_drift(u: np.ndarray, b_vals: np.ndarray, dx, periodic: bool) -> np.ndarray:
    out = np.zeros_like(u)
    d = u.ndim
    for k in range(d):
        bk = b_vals[..., k]
        back = (u - _shift(u, k, -1, periodic)) / dx[k]
        fwd = (_shift(u, k, 1, periodic) - u) / dx[k]
        out += np.maximum(bk, 0.0) * back + np.minimum(bk, 0.0) * fwd
    return out


def solve(field: CoefficientField, u0: GridFunction, cfg: SolverConfig) -> GridFunction:
    """March the implicit-diffusion / explicit-upwind-drift scheme to T.

    Returns the space-time solution sampled at the step times k*dt (the
    output grid's cells are centered on those nodes).  Raises SolverError if
    an implicit solve misses ``linear_tol``; raises SolverConfigError on an
    advective CFL violation.
    """
    d = u0.d
    x0, dx, nx = u0.x0, u0.dx, u0.nx
    if cfg.dx is not None and any(abs(h - cfg.dx) > 1e-12 for h in dx):
        raise SolverConfigError("config dx does not match the initial-condition grid")
    periodic = u0.boundary == "periodic"
    n_steps = int(round(cfg.T / cfg.dt))
    X = _mesh(x0, dx, nx)

    has_drift = field.b1 is not None or field.b2 is not None
    if has_drift:
        bmax = 0.0
        for t in (0.0, cfg.T / 2, cfg.T):
            bv = field.b_total(t, X)
            for k in range(d):
                bmax = max(bmax, float(np.abs(bv[..., k]).max()) * cfg.dt / dx[k])
        if bmax > cfg.cfl_limit:
            raise SolverConfigError(
                f"advective CFL dt*max|b|/dx = {bmax:.3f} exceeds {cfg.cfl_limit}")

    N = int(np.prod(nx))
    L = _assemble_diffusion(field, 0.0, x0, dx, nx, periodic)
    M = sparse.identity(N, format="csr") - cfg.dt * L
    lu = None if field.time_dependent else splinalg.splu(M.tocsc())

    u = np.asarray(u0.values[0], dtype=float).copy()
    out = np.empty((n_steps + 1,) + nx)
    out[0] = u
    for step in range(n_steps):
        t = step * cfg.dt
        rhs = u.copy()
        if has_drift:
            rhs += cfg.dt * _upwind_drift(u, field.b_total(t, X), dx, periodic)
        if field.forcing is not None:
            rhs += cfg.dt * field.forcing(t, X)
        if field.time_dependent:
            L = _assemble_diffusion(field, t + cfg.dt, x0, dx, nx, periodic)
            M = sparse.identity(N, format="csr") - cfg.dt * L
            sol, info = splinalg.bicgstab(M, rhs.ravel(), x0=u.ravel(),
                                          rtol=cfg.linear_tol, maxiter=cfg.max_iter)
            if info != 0:
                res = np.linalg.norm(M @ sol - rhs.ravel())
                raise SolverError(f"implicit solve failed at step {step}: residual {res:.3e}")
        else:
            sol = lu.solve(rhs.ravel())
        res = np.linalg.norm(M @ sol - rhs.ravel())
        if not res <= cfg.linear_tol * (np.linalg.norm(rhs) + 1.0):
            raise SolverError(f"implicit solve residual {res:.3e} exceeds tolerance")
        u = sol.reshape(nx)
        if not np.all(np.isfinite(u)):
            raise SolverError(f"solution lost finiteness at step {step}")
        out[step + 1] = u
    return GridFunction(-cfg.dt / 2.0, cfg.dt, x0, dx, out, u0.boundary)


# ---------------------------------------------------------------------------
# weak residual, Steklov mean, maximum-principle report
# ---------------------------------------------------------------------------


def _time_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    return np.gradient(values, dt, axis=0, edge_order=2)


def weak_residual(u: GridFunction, field: CoefficientField, test_bank) -> float:
    """Max over the bank of the integrated-by-parts identity residual.

    Each test function must vanish on a 2-cell rim in space and time;
    derivatives of both u and the tests are second-order differences, all
    pairings are midpoint quadrature.
    """
    results = []
    X = u.meshgrid()
    tc = u.t_centers()
    du = mn.spatial_gradient(u)  # (d, nt, *nx)
    a_vals = np.stack([field.a_matrix(t, X) for t in tc])  # (nt, *nx, d, d)
    flux = np.einsum("t...ij,jt...->it...", a_vals, du)
    b_vals = None
    if field.b1 is not None or field.b2 is not None:
        b_vals = np.stack([field.b_total(t, X) for t in tc])
    f_vals = None
    if field.forcing is not None:
        f_vals = np.stack([field.forcing(t, X) for t in tc])
    meas = u.dt * u.cell_volume
    for phi in test_bank:
        if phi.values.shape != u.values.shape:
            raise TestBankError("test function must live on the solution grid")
        rim = np.ones_like(phi.values, dtype=bool)
        core = (slice(2, -2),) * (u.d + 1)
        rim[core] = False
        if np.any(np.abs(phi.values[rim]) > 0):
            raise TestBankError("test function touches the domain boundary")
        dphi_t = _time_derivative(phi.values, u.dt)
        dphi = mn.spatial_gradient(phi)
        r = -(u.values * dphi_t).sum() * meas
        r += (flux * dphi).sum() * meas
        if b_vals is not None:
            bgrad = sum(b_vals[..., i] * du[i] for i in range(u.d))
            r -= (bgrad * phi.values).sum() * meas
        if f_vals is not None:
            r -= (f_vals * phi.values).sum() * meas
        results.append(abs(float(r)))
    return max(results)


def steklov_mean(u: GridFunction, h: float) -> GridFunction:
    """Forward time average ``(1/h) int_0^h u(t + s) ds`` by the trapezoid rule.

    ``h`` must be a positive multiple of dt; samples beyond the grid enter as
    zero (zero extension).  Commutes with spatial shifts by construction.
    """
    m = int(round(h / u.dt))
    if m < 1 or abs(m * u.dt - h) > 1e-10 * u.dt:
        raise SolverConfigError("h must be a positive multiple of dt (h >= dt)")
    weights = np.full(m + 1, u.dt / h)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    vals = np.zeros_like(u.values)
    padded = np.concatenate([u.values, np.zeros((m,) + u.nx)], axis=0)
    for j, w in enumerate(weights):
        vals += w * padded[j: j + u.nt]
    return u.with_values(vals)


@dataclass
class MaxPrincipleReport:
    u_inf: float
    v_norm: float
    f_norm: float
    ratio: float | None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def max_principle_report(u: GridFunction, field: CoefficientField, cfg: ExponentConfig,
                         T: float, lattice_step: float = 0.5) -> MaxPrincipleReport:
    """Pieces of the global boundedness estimate on [0, T].

    ``(||u||_inf + |||u|||_V) / |||f|||`` with the forcing norm in the
    declared (p4, q4) time-outer localized space.  A vanishing forcing gives
    ratio None (reported, not raised).
    """
    uT = mn.restrict_time(u, 0.0, T)
    u_inf = float(np.abs(uT.values).max())
    vn = mn.v_norm(uT, cfg.kappa, lattice_step)
    if field.forcing is None:
        return MaxPrincipleReport(u_inf, vn, 0.0, None)
    X = u.meshgrid()
    f_vals = np.stack([field.forcing(t, X) for t in uT.t_centers()])
    f_gf = GridFunction(uT.t0, uT.dt, uT.x0, uT.dx, f_vals, uT.boundary)
    f_norm = mn.localized_norm(f_gf, MixedNormSpec(cfg.p4, cfg.q4, "time-outer"), lattice_step)
    if f_norm == 0.0:
        return MaxPrincipleReport(u_inf, vn, 0.0, None)
    return MaxPrincipleReport(u_inf, vn, f_norm, (u_inf + vn) / f_norm)

"""Monte Carlo engine for the mollified singular/degenerate diffusion families.

The scheme is plain Euler-Maruyama for ``dX = b dt + sqrt(2) sigma dW`` (all
simulated families are bounded after the truncation shift; the raw singular
field is only simulated with an evaluation floor and is documented as a
heuristic).  Each path owns an independent counter-based Philox stream keyed
by ``(seed, path_index)``, so ensembles are bitwise reproducible and the first
k paths of a run coincide with a k-path run at the same seed.  Statistics are
fixed-order numpy reductions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from .cutoffs import INF, CutoffFamily, CutoffFamilyError, f_R_n_alpha, phi_R, phi_R_prime
from .mixed_norms import GridFunction

__all__ = [
    "SdeParameterError",
    "SdeCoefficients",
    "PathEnsemble",
    "SDE_FAMILIES",
    "build_coefficients",
    "euler_maruyama",
    "krylov_functional",
    "modulus_report",
    "sup_moment",
    "sliced_wasserstein1",
    "approximation_cauchy_report",
    "uniqueness_perturbation_report",
    "export_ensemble",
    "load_ensemble",
]

RAW_FIELD_FLOOR = 1e-12


class SdeParameterError(ValueError):
    """Family parameters outside their validity range (message names the constraint)."""


@dataclass
class SdeCoefficients:
    """Diffusion/drift evaluators; ``sigma_diag`` is the fast diagonal path.

    ``floor_hits`` counts evaluations clamped by the raw-field floor
    (only the unmollified singular family uses it).
    """

    d: int
    family_tag: str
    params: dict
    sigma_diag: Callable | None = None
    sigma: Callable | None = None
    b: Callable | None = None
    floor_hits: list = dc_field(default_factory=lambda: [0])

    def sigma_matrix(self, t, X):
        if self.sigma is not None:
            return self.sigma(t, X)
        diag = self.sigma_diag(t, X)
        out = np.zeros(diag.shape + (self.d,))
        for k in range(self.d):
            out[..., k, k] = diag[..., k]
        return out


SDE_FAMILIES = {
    "brownian": "no constraints (sigma = I, b = 0)",
    "example-6.1": "d >= 3, 0 < alpha < min(d/2 - 1, 1/2 + 1/(d-1))",
    "example-6.2": "d = 2, 0 < alpha < 1/4",
    "prop-6.1": "d >= 3, 0 < alpha < min(d/2 - 1, 1/2 + 1/(d-1)), 0 < beta < 2*alpha, lambda >= 0",
}


def build_coefficients(
    family_tag: str,
    d: int | None = None,
    R: float = 1.0,
    alpha: float = 0.0,
    beta: float = 0.0,
    lam: float = 0.0,
    n: float = INF,
) -> SdeCoefficients:
    """Construct the named diffusion family with validated parameter ranges.

    ``n = inf`` selects the raw field; for the singular family that means a
    hard floor at |x| = 1e-12 with clamped evaluations counted in
    ``floor_hits`` (heuristic, reported).
    """
    params = {"R": R, "alpha": alpha, "beta": beta, "lambda": lam, "n": n}
    if family_tag == "brownian":
        d = d or 1

        def sigma_diag(t, X):
            return np.ones(X.shape[:-1] + (d,))

        return SdeCoefficients(d, family_tag, params, sigma_diag=sigma_diag)

    if family_tag == "example-6.1":
        d = d or 3
        hi = min(d / 2 - 1, 0.5 + 1.0 / (d - 1))
        if d < 3 or not 0 < alpha < hi:
            raise SdeParameterError(
                f"example-6.1 requires d >= 3 and 0 < alpha < min(d/2 - 1, 1/2 + 1/(d-1)) = {hi}")
        fam = CutoffFamily(R, -alpha / 2.0, n)

        def sigma_diag(t, X):
            s = fam.f_n((X**2).sum(axis=-1))
            return np.repeat(s[..., None], d, axis=-1)

        return SdeCoefficients(d, family_tag, params, sigma_diag=sigma_diag)

    if family_tag == "example-6.2":
        if d not in (None, 2) or not 0 < alpha < 0.25:
            raise SdeParameterError("example-6.2 requires d = 2 and 0 < alpha < 1/4")
        fam = CutoffFamily(R, alpha / 2.0, n)

        def sigma_diag(t, X):
            return np.stack([fam.f_n(X[..., 1] ** 2), fam.f_n(X[..., 0] ** 2)], axis=-1)

        return SdeCoefficients(2, family_tag, params, sigma_diag=sigma_diag)

    if family_tag == "prop-6.1":
        d = d or 3
        hi = min(d / 2 - 1, 0.5 + 1.0 / (d - 1))
        if d < 3 or not 0 <= alpha < hi:
            raise SdeParameterError(
                f"prop-6.1 requires d >= 3 and 0 <= alpha < min(d/2 - 1, 1/2 + 1/(d-1)) = {hi}")
        if lam < 0:
            raise SdeParameterError("prop-6.1 requires lambda >= 0")
        if lam > 0 and not (0 < beta < 2 * alpha):
            raise SdeParameterError("prop-6.1 requires 0 < beta < 2*alpha for a nonzero drift")
        coeffs = SdeCoefficients(d, family_tag, params)
        inv_sqrt2 = 1.0 / math.sqrt(2.0)

        if math.isinf(n):
            def sigma_diag(t, X, coeffs=coeffs):
                r = np.sqrt((X**2).sum(axis=-1))
                hits = int((r < RAW_FIELD_FLOOR).sum())
                if hits:
                    coeffs.floor_hits[0] += hits
                r = np.maximum(r, RAW_FIELD_FLOOR)
                s = inv_sqrt2 * r ** (-alpha)
                return np.repeat(s[..., None], d, axis=-1)

            def b(t, X, coeffs=coeffs):
                if lam == 0:
                    return np.zeros_like(X)
                r = np.sqrt((X**2).sum(axis=-1))
                hits = int((r < RAW_FIELD_FLOOR).sum())
                if hits:
                    coeffs.floor_hits[0] += hits
                r = np.maximum(r, RAW_FIELD_FLOOR)
                return lam * X * (r ** (-beta - 1.0))[..., None]
        else:
            sig_fam = CutoffFamily(R, -alpha / 2.0, n)
            drift_fam = CutoffFamily(R, -(beta + 1.0) / 2.0, n)

            def sigma_diag(t, X):
                s = inv_sqrt2 * sig_fam.f_n((X**2).sum(axis=-1))
                return np.repeat(s[..., None], d, axis=-1)

            def b(t, X):
                if lam == 0:
                    return np.zeros_like(X)
                return lam * X * drift_fam.f_n((X**2).sum(axis=-1))[..., None]

        coeffs.sigma_diag = sigma_diag
        coeffs.b = b
        return coeffs

    raise SdeParameterError(f"unknown family {family_tag!r}; known: {sorted(SDE_FAMILIES)}")


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass
class PathEnsemble:
    """N paths on a uniform time grid with per-path seed provenance."""

    paths: np.ndarray  # (N, n_steps + 1, d)
    t0: float
    dt: float
    seed: int
    scheme_tag: str = "euler-maruyama"
    family_tag: str = "custom"
    params: dict = dc_field(default_factory=dict)
    frozen: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def n_steps(self) -> int:
        return self.paths.shape[1] - 1

    @property
    def d(self) -> int:
        return self.paths.shape[2]

    @property
    def n_frozen(self) -> int:
        return 0 if self.frozen is None else int(self.frozen.sum())

    def alive(self) -> np.ndarray:
        if self.frozen is None:
            return np.ones(self.n_paths, dtype=bool)
        return ~self.frozen

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def _path_noise(seed: int, start: int, count: int, n_steps: int, d: int) -> np.ndarray:
    """Per-path Philox streams keyed (seed, path_index); path-major draws."""
    out = np.empty((count, n_steps, d))
    for i in range(count):
        key = np.array([seed, start + i], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        out[i] = gen.standard_normal((n_steps, d))
    return out


def euler_maruyama(
    coeffs: SdeCoefficients,
    x0,
    s: float,
    T: float,
    dt: float,
    n_paths: int,
    seed: int,
    chunk: int = 20000,
) -> PathEnsemble:
    """Simulate ``X_(k+1) = X_k + b dt + sqrt(2) sigma xi sqrt(dt)`` from time s to T.

    Deterministic given the seed; a path that leaves the finite range is
    frozen at its last finite state and excluded from statistics (the count is
    carried on the ensemble).
    """
    if dt > 1e-2 + 1e-15:
        raise SdeParameterError("dt must be <= 1e-2")
    if n_paths > 10**6:
        raise SdeParameterError("n_paths capped at 1e6")
    n_steps = int(round((T - s) / dt))
    if n_steps < 1 or abs(s + n_steps * dt - T) > 1e-10:
        raise SdeParameterError("T - s must be a positive multiple of dt")
    d = coeffs.d
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (d,))
    paths = np.empty((n_paths, n_steps + 1, d))
    frozen = np.zeros(n_paths, dtype=bool)
    sqrt2dt = math.sqrt(2.0 * dt)

    for lo in range(0, n_paths, chunk):
        hi = min(lo + chunk, n_paths)
        noise = _path_noise(seed, lo, hi - lo, n_steps, d)
        X = np.tile(x0, (hi - lo, 1))
        paths[lo:hi, 0] = X
        fz = np.zeros(hi - lo, dtype=bool)
        for k in range(n_steps):
            t = s + k * dt
            if coeffs.sigma_diag is not None:
                diff = coeffs.sigma_diag(t, X) * noise[:, k, :]
            else:
                diff = np.einsum("nij,nj->ni", coeffs.sigma(t, X), noise[:, k, :])
            step = sqrt2dt * diff
            if coeffs.b is not None:
                step = step + dt * coeffs.b(t, X)
            Xn = X + step
            bad = ~np.isfinite(Xn).all(axis=1)
            newly = bad & ~fz
            if newly.any():
                Xn[newly] = X[newly]
                fz |= newly
            if fz.any():
                Xn[fz] = X[fz]
            X = Xn
            paths[lo:hi, k + 1] = X
        frozen[lo:hi] = fz
    return PathEnsemble(paths, s, dt, seed, family_tag=coeffs.family_tag,
                        params=dict(coeffs.params), frozen=frozen)


# ---------------------------------------------------------------------------
# path statistics
# ---------------------------------------------------------------------------


def _grid_lookup(f: GridFunction, t: float, X: np.ndarray) -> np.ndarray:
    """Piecewise-constant cell lookup of f at (t, X); zero outside the grid."""
    it = math.floor((t - f.t0) / f.dt)
    if it < 0 or it >= f.nt:
        return np.zeros(X.shape[0])
    idx = []
    inside = np.ones(X.shape[0], dtype=bool)
    for k in range(f.d):
        ik = np.floor((X[:, k] - f.x0[k]) / f.dx[k]).astype(int)
        inside &= (ik >= 0) & (ik < f.nx[k])
        idx.append(np.clip(ik, 0, f.nx[k] - 1))
    vals = f.values[(it,) + tuple(idx)]
    return np.where(inside, vals, 0.0)


def krylov_functional(ens: PathEnsemble, f: GridFunction, t0: float, t1: float
                      ) -> tuple[float, float]:
    """Path average of the occupation integral ``int_t0^t1 f(s, X_s) ds``.

    Left-endpoint quadrature on the ensemble's step grid; f is read by cell
    lookup with zero extension outside its grid.  Returns (estimate, stderr)
    over the non-frozen paths.
    """
    times = ens.times()
    alive = ens.alive()
    k_idx = np.nonzero((times >= t0 - 1e-12) & (times < t1 - 1e-12))[0]
    if k_idx.size == 0:
        raise SdeParameterError("[t0, t1] does not meet the ensemble time grid")
    acc = np.zeros(ens.n_paths)
    for k in k_idx:
        acc += _grid_lookup(f, times[k], ens.paths[:, k, :]) * ens.dt
    vals = acc[alive]
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return est, stderr


@dataclass
class ModulusReport:
    deltas: np.ndarray
    moments: np.ndarray
    stderrs: np.ndarray
    slope: float
    intercept: float


def modulus_report(ens: PathEnsemble, delta_grid, T: float | None = None) -> ModulusReport:
    """Least-squares slope of ``log E[sup_t sup_(s<=delta) |X_(t+s) - X_t|^(1/2)]`` vs log delta.

    Each delta must be a multiple of dt and the grid must span at least 1.5
    decades with at least 3 values.
    """
    deltas = np.asarray(delta_grid, dtype=float)
    if deltas.size < 3:
        raise SdeParameterError("need at least 3 delta values for the fit")
    if math.log10(deltas.max() / deltas.min()) < 1.5 - 1e-9:
        raise SdeParameterError("delta grid must span at least 1.5 decades")
    n_keep = ens.n_steps + 1 if T is None else int(round((T - ens.t0) / ens.dt)) + 1
    P = ens.paths[ens.alive(), :n_keep, :]
    lags = []
    for delta in deltas:
        m = int(round(delta / ens.dt))
        if m < 1 or abs(m * ens.dt - delta) > 1e-10:
            raise SdeParameterError(f"delta={delta} is not a multiple of dt={ens.dt}")
        lags.append(m)
    # one incremental sweep over lags; snapshot the running max at each delta
    best = np.zeros(P.shape[0])
    snapshots = {}
    j = 1
    for m in sorted(set(lags)):
        while j <= m:
            diff = P[:, j:, :] - P[:, :-j, :]
            dist = np.sqrt((diff**2).sum(axis=2)).max(axis=1)
            np.maximum(best, dist, out=best)
            j += 1
        snapshots[m] = np.sqrt(best)
    moments = np.array([snapshots[m].mean() for m in lags])
    errs = np.array([snapshots[m].std(ddof=1) / math.sqrt(snapshots[m].size) for m in lags])
    slope, intercept = np.polyfit(np.log(deltas), np.log(moments), 1)
    return ModulusReport(deltas, moments, errs, float(slope), float(intercept))


def sup_moment(ens: PathEnsemble, T: float | None = None) -> tuple[float, float]:
    """(mean, stderr) of ``sup_(t<=T) |X_t|`` over the non-frozen paths."""
    n_keep = ens.n_steps + 1 if T is None else int(round((T - ens.t0) / ens.dt)) + 1
    P = ens.paths[ens.alive(), :n_keep, :]
    if P.shape[0] == 0:
        raise SdeParameterError("no live paths left in the ensemble")
    sups = np.sqrt((P**2).sum(axis=2)).max(axis=1)
    se = float(sups.std(ddof=1) / math.sqrt(sups.size)) if sups.size > 1 else 0.0
    return float(sups.mean()), se


def sliced_wasserstein1(A: np.ndarray, B: np.ndarray) -> float:
    """Coordinate-wise max of the 1-D empirical W1 distances (sorted-sample mean gap)."""
    if A.shape != B.shape:
        raise SdeParameterError("sliced W1 needs equal sample counts")
    out = 0.0
    for k in range(A.shape[1]):
        out = max(out, float(np.abs(np.sort(A[:, k]) - np.sort(B[:, k])).mean()))
    return out


@dataclass
class CauchyReport:
    n_list: list
    distances: list
    spearman: float
    sup_moments: list
    sup_stderrs: list
    growth_slope: float
    growth_slope_stderr: float


def approximation_cauchy_report(
    family_tag: str,
    n_list,
    x0,
    T: float,
    dt: float,
    n_paths: int,
    seed: int,
    **family_params,
) -> CauchyReport:
    """Empirical-law Cauchy table across the mollification index.

    Simulates each index with the same seed (coupled noise), measures the
    sliced W1 distance between consecutive terminal marginals, and regresses
    the sup moment on the index to detect growth.  A nonincreasing distance
    trend shows as rank correlation <= 0.
    """
    n_list = list(n_list)
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise SdeParameterError("n_list must be increasing with at least 3 entries")
    terminals, sups, errs = [], [], []
    for n in n_list:
        coeffs = build_coefficients(family_tag, n=n, **family_params)
        ens = euler_maruyama(coeffs, x0, 0.0, T, dt, n_paths, seed)
        terminals.append(ens.paths[ens.alive(), -1, :])
        m, e = sup_moment(ens)
        sups.append(m)
        errs.append(e)
    distances = [sliced_wasserstein1(terminals[i], terminals[i + 1])
                 for i in range(len(n_list) - 1)]
    if len(set(distances)) == 1:
        rho = 0.0  # no trend at the noise floor (identical laws)
    else:
        rho = float(stats.spearmanr(np.arange(len(distances)), distances).statistic)
    # weighted straight-line growth test for the sup moment vs index rank
    x = np.arange(len(n_list), dtype=float)
    xbar = x.mean()
    sxx = ((x - xbar) ** 2).sum()
    coef = (x - xbar) / sxx
    slope = float((coef * np.asarray(sups)).sum())
    slope_err = float(math.sqrt((coef**2 * np.asarray(errs) ** 2).sum()))
    return CauchyReport(n_list, distances, rho, sups, errs, slope, slope_err)


def uniqueness_perturbation_report(
    eps_list,
    x0,
    T: float,
    dt: float,
    n_paths: int,
    seed: int,
    family_tag: str = "prop-6.1",
    **family_params,
) -> dict:
    """Shared-noise perturbation decay table: ``E sup_t |X^(x0) - X^(x0+eps e1)|``.

    A numerical proxy for pathwise uniqueness only (it cannot certify it).
    eps = 0 reproduces the base ensemble bitwise, so the divergence vanishes
    exactly there; the table must decrease as eps does (rank test).
    """
    eps_list = [float(e) for e in eps_list]
    coeffs = build_coefficients(family_tag, **family_params)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (coeffs.d,))
    base = euler_maruyama(coeffs, x0, 0.0, T, dt, n_paths, seed)
    rows = []
    for eps in eps_list:
        shifted = x0.copy()
        shifted[0] += eps
        pert = euler_maruyama(coeffs, shifted, 0.0, T, dt, n_paths, seed)
        alive = base.alive() & pert.alive()
        diff = np.sqrt(((base.paths[alive] - pert.paths[alive]) ** 2).sum(axis=2)).max(axis=1)
        rows.append({"eps": eps, "divergence": float(diff.mean()),
                     "stderr": float(diff.std(ddof=1) / math.sqrt(max(diff.size, 2)))})
    eps_arr = [r["eps"] for r in rows]
    div_arr = [r["divergence"] for r in rows]
    pos = [i for i, e in enumerate(eps_arr) if e > 0]
    rho = float(stats.spearmanr([eps_arr[i] for i in pos],
                                [div_arr[i] for i in pos]).statistic) if len(pos) >= 2 else 1.0
    return {"rows": rows, "spearman_eps_vs_divergence": rho,
            "floor_hits": coeffs.floor_hits[0]}


# ---------------------------------------------------------------------------
# ensemble export
# ---------------------------------------------------------------------------


def export_ensemble(ens: PathEnsemble, path_prefix) -> tuple[Path, Path]:
    """Binary path array + JSON header {family_tag, params, seed, dt, T, n_paths}."""
    prefix = Path(path_prefix)
    header = {
        "family_tag": ens.family_tag,
        "params": {k: (None if isinstance(v, float) and math.isinf(v) else v)
                   for k, v in ens.params.items()},
        "seed": ens.seed,
        "dt": ens.dt,
        "t0": ens.t0,
        "T": ens.t0 + ens.dt * ens.n_steps,
        "n_paths": ens.n_paths,
        "n_steps": ens.n_steps,
        "d": ens.d,
        "scheme_tag": ens.scheme_tag,
        "n_frozen": ens.n_frozen,
    }
    jpath = prefix.with_suffix(".json")
    bpath = prefix.with_suffix(".bin")
    jpath.write_text(json.dumps(header, sort_keys=True, indent=1) + "\n")
    ens.paths.astype("<f8").tofile(bpath)
    return jpath, bpath


def load_ensemble(path_prefix) -> PathEnsemble:
    prefix = Path(path_prefix)
    header = json.loads(prefix.with_suffix(".json").read_text())
    paths = np.fromfile(prefix.with_suffix(".bin"), dtype="<f8")
    paths = paths.reshape(header["n_paths"], header["n_steps"] + 1, header["d"])
    params = {k: (math.inf if v is None else v) for k, v in header["params"].items()}
    return PathEnsemble(paths, header["t0"], header["dt"], header["seed"],
                        header["scheme_tag"], header["family_tag"], params)

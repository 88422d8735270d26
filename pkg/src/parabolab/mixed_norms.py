"""Space-time grid functions and the mixed / localized Lebesgue norms built on them.

A :class:`GridFunction` holds samples of ``f(t, x)`` at the centers of a uniform
space-time lattice.  Every integral in this module is a midpoint-rule sum (each
sample owns one cell of measure ``dt * prod(dx)``), so indicators aligned with
cell edges integrate exactly and smooth functions integrate at second order.
Infinite exponents are evaluated as maxima over the samples.

Two norm orderings are supported, time-outer

    ``||f|| = ( int ||f(t,.)||_p^q dt )^(1/q)``

and space-outer

    ``||f|| = ( int ||f(.,x)||_q^p dx )^(1/p)``,

where ``p`` always denotes the spatial exponent and ``q`` the temporal one.
Localized ("tilde") norms take a supremum of windowed norms over shifted unit
space-time cylinders ``[s - r^2, s + r^2] x B_r(z)``; the shift lattice is
snapped to the sample lattice, which loses nothing at grid resolution because a
sub-cell shift cannot change which samples a window captures.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage, signal

INF = math.inf

__all__ = [
    "INF",
    "GridError",
    "ExponentError",
    "GradientError",
    "GridFunction",
    "MixedNormSpec",
    "Cylinder",
    "from_callable",
    "mixed_norm",
    "mixed_norm_masked",
    "cylinder_masks",
    "cylinder_norm",
    "localized_norm",
    "localized_spatial_norm",
    "covering_equivalence_report",
    "spatial_gradient",
    "gradient_magnitude",
    "gradient_sup",
    "v_norm",
    "minkowski_gap",
    "restrict_time",
    "save_grid_function",
    "load_grid_function",
    "norm_record",
]


class GridError(ValueError):
    """Invalid grid geometry or non-finite sample values."""


class ExponentError(ValueError):
    """Exponent outside [1, inf] or an invalid norm ordering."""


class GradientError(ValueError):
    """Grid too small to support the second-order gradient stencils."""


_BOUNDARY_TAGS = ("zero-extension", "periodic")

# work threshold above which localized norms switch to the convolution path
_FFT_WORK_THRESHOLD = 2.0e7


def _check_exponent(e: float, name: str = "exponent") -> float:
    e = float(e)
    if math.isnan(e) or e < 1.0:
        raise ExponentError(f"{name} must lie in [1, inf], got {e}")
    return e


@dataclass(frozen=True)
class MixedNormSpec:
    """Mixed-norm exponents: ``p`` spatial, ``q`` temporal, plus the ordering."""

    p: float
    q: float
    order: str = "time-outer"

    def __post_init__(self):
        _check_exponent(self.p, "p")
        _check_exponent(self.q, "q")
        if self.order not in ("time-outer", "space-outer"):
            raise ExponentError(f"unknown ordering {self.order!r}")

    def label(self) -> str:
        def fmt(e):
            return "inf" if math.isinf(e) else f"{e:g}"

        if self.order == "time-outer":
            return f"L^({fmt(self.q)},{fmt(self.p)})_(t,x)"
        return f"L^({fmt(self.p)},{fmt(self.q)})_(x,t)"


@dataclass(frozen=True)
class Cylinder:
    """Shifted parabolic cylinder ``[s - r^2, s + r^2] x B_r(z)``."""

    r: float
    center: tuple  # (s, (z_1, ..., z_d))

    def __post_init__(self):
        if not self.r > 0:
            raise GridError(f"cylinder radius must be positive, got {self.r}")

    @property
    def s(self) -> float:
        return float(self.center[0])

    @property
    def z(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.center[1], dtype=float))


class GridFunction:
    """Samples of a space-time function on a uniform lattice (cell centers).

    Parameters
    ----------
    t0, dt:
        Left edge of the first time cell and the time step.
    x0, dx:
        Left box edges and spatial steps, one entry per axis (d <= 3).
    values:
        Array of shape ``(nt, nx_1, ..., nx_d)``; must be finite.
    boundary:
        ``"zero-extension"`` (the function is 0 outside the box) or
        ``"periodic"``.
    """

    __slots__ = ("t0", "dt", "x0", "dx", "values", "boundary")

    def __init__(self, t0, dt, x0, dx, values, boundary="zero-extension"):
        values = np.array(values, dtype=float, copy=True)
        if values.ndim < 2 or values.ndim > 4:
            raise GridError(f"values must have 1 time + 1..3 space axes, got shape {values.shape}")
        d = values.ndim - 1
        x0 = tuple(float(v) for v in np.atleast_1d(x0))
        dx = tuple(float(v) for v in np.atleast_1d(dx))
        if len(x0) != d or len(dx) != d:
            raise GridError(f"x0/dx must have {d} entries to match values of shape {values.shape}")
        if not dt > 0 or any(not h > 0 for h in dx):
            raise GridError("dt and every dx must be positive")
        if values.shape[0] < 2 or any(n < 2 for n in values.shape[1:]):
            raise GridError("need at least 2 samples along every axis")
        if not np.all(np.isfinite(values)):
            raise GridError("grid values must be finite (no NaN/Inf)")
        if boundary not in _BOUNDARY_TAGS:
            raise GridError(f"boundary must be one of {_BOUNDARY_TAGS}, got {boundary!r}")
        values.setflags(write=False)
        object.__setattr__(self, "t0", float(t0))
        object.__setattr__(self, "dt", float(dt))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "boundary", boundary)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    # -- geometry ----------------------------------------------------------
    @property
    def d(self) -> int:
        return self.values.ndim - 1

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> tuple:
        return self.values.shape[1:]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def t_centers(self) -> np.ndarray:
        return self.t0 + (np.arange(self.nt) + 0.5) * self.dt

    def x_centers(self, axis: int) -> np.ndarray:
        return self.x0[axis] + (np.arange(self.nx[axis]) + 0.5) * self.dx[axis]

    def meshgrid(self) -> np.ndarray:
        """Cell-center coordinates, shape ``(*nx, d)``."""
        axes = [self.x_centers(k) for k in range(self.d)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.t0, self.dt, self.x0, self.dx, values, self.boundary)

    def scaled(self, c: float) -> "GridFunction":
        return self.with_values(c * self.values)


def from_callable(fn: Callable, t_span, nt: int, box, nx, boundary="zero-extension") -> GridFunction:
    """Sample ``fn(t, X)`` at cell centers; ``X`` has shape ``(*nx, d)``.

    ``box`` is a sequence of (lo, hi) pairs, one per spatial axis.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    dt = (t1 - t0) / int(nt)
    box = [(float(lo), float(hi)) for lo, hi in box]
    nx = tuple(int(n) for n in np.atleast_1d(nx))
    if len(nx) != len(box):
        raise GridError("box and nx must have the same number of axes")
    x0 = tuple(lo for lo, _ in box)
    dx = tuple((hi - lo) / n for (lo, hi), n in zip(box, nx))
    axes = [lo + (np.arange(n) + 0.5) * h for (lo, _), n, h in zip(box, nx, dx)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    ts = t0 + (np.arange(nt) + 0.5) * dt
    vals = np.empty((nt,) + nx)
    for i, t in enumerate(ts):
        vals[i] = fn(t, X)
    return GridFunction(t0, dt, x0, dx, vals, boundary)


# ---------------------------------------------------------------------------
# plain mixed norms
# ---------------------------------------------------------------------------


def _reduce(a: np.ndarray, e: float, weight: float, axis) -> np.ndarray:
    """Weighted l^e reduction over ``axis``; ``e = inf`` is a max."""
    a = np.abs(a)
    if math.isinf(e):
        return a.max(axis=axis)
    if e == 1.0:
        return a.sum(axis=axis) * weight
    return (np.power(a, e).sum(axis=axis) * weight) ** (1.0 / e)


def _reduce_values(values: np.ndarray, spec: MixedNormSpec, dt: float, cellvol: float) -> float:
    d = values.ndim - 1
    space_axes = tuple(range(1, d + 1))
    if spec.order == "time-outer":
        inner = _reduce(values, spec.p, cellvol, space_axes)
        return float(_reduce(inner, spec.q, dt, 0))
    inner = _reduce(values, spec.q, dt, 0)
    return float(_reduce(inner, spec.p, cellvol, tuple(range(d))))


def mixed_norm(f: GridFunction, spec: MixedNormSpec) -> float:
    """Mixed norm of ``f`` by midpoint quadrature (max over samples for inf)."""
    return _reduce_values(f.values, spec, f.dt, f.cell_volume)


def mixed_norm_masked(f: GridFunction, spec: MixedNormSpec, time_mask=None, space_mask=None) -> float:
    """Mixed norm of ``f`` restricted to a product window ``time_mask x space_mask``."""
    vals = f.values
    if time_mask is not None:
        vals = vals * np.asarray(time_mask, dtype=float).reshape((-1,) + (1,) * f.d)
    if space_mask is not None:
        vals = vals * np.asarray(space_mask, dtype=float)[None]
    return _reduce_values(vals, spec, f.dt, f.cell_volume)


def cylinder_masks(f: GridFunction, cyl: Cylinder) -> tuple[np.ndarray, np.ndarray]:
    """Indicator masks (time, space) of the cells whose centers lie in ``cyl``."""
    eps = 1e-12
    tc = f.t_centers()
    tmask = np.abs(tc - cyl.s) <= cyl.r**2 * (1 + eps) + eps * f.dt
    z = cyl.z
    if z.size != f.d:
        raise GridError(f"cylinder center has {z.size} spatial coordinates, grid has {f.d}")
    X = f.meshgrid()
    dist2 = ((X - z) ** 2).sum(axis=-1)
    smask = dist2 <= cyl.r**2 * (1 + eps) + eps * min(f.dx)
    return tmask.astype(float), smask.astype(float)


def cylinder_norm(f: GridFunction, spec: MixedNormSpec, cyl: Cylinder) -> float:
    tmask, smask = cylinder_masks(f, cyl)
    return mixed_norm_masked(f, spec, tmask, smask)


def minkowski_gap(f: GridFunction, p: float, q: float) -> float:
    """``||f||_(x,t-order) - ||f||_(t,x-order)`` for ``q >= p`` (must be >= -eps)."""
    _check_exponent(p, "p")
    _check_exponent(q, "q")
    if q < p:
        raise ExponentError("minkowski_gap requires q >= p; swap the roles for the reverse bound")
    a = mixed_norm(f, MixedNormSpec(p, q, "space-outer"))
    b = mixed_norm(f, MixedNormSpec(p, q, "time-outer"))
    return a - b


def restrict_time(f: GridFunction, t_lo: float, t_hi: float) -> GridFunction:
    """Sub-grid of the cells whose time centers lie in ``[t_lo, t_hi]``."""
    tc = f.t_centers()
    keep = np.nonzero((tc >= t_lo - 1e-12) & (tc <= t_hi + 1e-12))[0]
    if keep.size < 2:
        raise GridError("time restriction keeps fewer than 2 samples")
    return GridFunction(f.t0 + keep[0] * f.dt, f.dt, f.x0, f.dx, f.values[keep], f.boundary)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


def _axis_gradient(values: np.ndarray, axis: int, h: float, periodic: bool) -> np.ndarray:
    n = values.shape[axis]
    if n < 3:
        raise GradientError("need at least 3 samples per spatial axis for the gradient")
    if periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)
    out = (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)
    # one-sided second-order stencils at the box edges
    sl = [slice(None)] * values.ndim

    def take(i):
        sl2 = list(sl)
        sl2[axis] = i
        return values[tuple(sl2)]

    first = (-3 * take(0) + 4 * take(1) - take(2)) / (2 * h)
    last = (3 * take(-1) - 4 * take(-2) + take(-3)) / (2 * h)
    sl0 = list(sl)
    sl0[axis] = 0
    sln = list(sl)
    sln[axis] = n - 1
    out[tuple(sl0)] = first
    out[tuple(sln)] = last
    return out


def spatial_gradient(f: GridFunction) -> np.ndarray:
    """Second-order spatial gradient, shape ``(d, nt, *nx)``.

    Central differences in the interior; periodic wrap or one-sided
    second-order stencils at the edges, per the boundary tag.
    """
    periodic = f.boundary == "periodic"
    return np.stack(
        [_axis_gradient(f.values, 1 + k, f.dx[k], periodic) for k in range(f.d)], axis=0
    )


def gradient_magnitude(f: GridFunction) -> GridFunction:
    g = spatial_gradient(f)
    return f.with_values(np.sqrt((g**2).sum(axis=0)))


def gradient_sup(f: GridFunction) -> float:
    """Largest discrete gradient magnitude; recorded per run, never asserted."""
    return float(gradient_magnitude(f).values.max())


# ---------------------------------------------------------------------------
# localized (tilde) norms
# ---------------------------------------------------------------------------


def _offset_range(step: float, radius: float) -> tuple[int, int]:
    """Cell-offset range covered by an edge-centered window of half-width ``radius``.

    Window centers sit on the edge lattice, cells at offsets ``o`` have centers
    at ``(o + 1/2) * step``; membership is ``|(o + 1/2) step| <= radius``, which
    is tie-free and gives exact measure for aligned radii.
    """
    o_max = int(math.floor(radius / step - 0.5 + 1e-9))
    o_min = -int(math.floor(radius / step + 0.5 + 1e-9))
    return o_min, max(o_max, o_min)


def _ball_kernel(dx: Sequence[float], radius: float):
    """Edge-centered ball kernel over cell offsets; returns (kernel, o_min list)."""
    ranges = [_offset_range(h, radius) for h in dx]
    axes = [(np.arange(lo, hi + 1) + 0.5) * h for (lo, hi), h in zip(ranges, dx)]
    grids = np.meshgrid(*axes, indexing="ij")
    dist2 = sum(g**2 for g in grids)
    kernel = (dist2 <= radius**2 * (1 + 1e-12)).astype(float)
    return kernel, [lo for lo, _ in ranges]


def _strides(f: GridFunction, lattice_step: float) -> tuple[int, list[int]]:
    st_t = max(1, int(round(lattice_step / f.dt)))
    st_x = [max(1, int(round(lattice_step / h))) for h in f.dx]
    return st_t, st_x


def _window_sum_time(arr: np.ndarray, o_min: int, o_max: int, dt: float) -> np.ndarray:
    """Edge-centered sliding window sums over cell offsets [o_min, o_max] (zero fill)."""
    csum = np.concatenate([np.zeros((1,) + arr.shape[1:]), np.cumsum(arr, axis=0)], axis=0)
    n = arr.shape[0]
    idx = np.arange(n)
    hi = np.clip(idx + o_max + 1, 0, n)
    lo = np.clip(idx + o_min, 0, n)
    return (csum[hi] - csum[lo]) * dt


def _window_max_time(arr: np.ndarray, o_min: int, o_max: int) -> np.ndarray:
    size = o_max - o_min + 1
    origin = o_min + size // 2
    return ndimage.maximum_filter1d(arr, size=size, axis=0, mode="constant", cval=0.0,
                                    origin=origin)


def _space_ball_reduce(arr: np.ndarray, p: float, kernel: np.ndarray, o_mins,
                       cellvol: float) -> np.ndarray:
    """Edge-centered spatial ball reduction of |arr| along the trailing axes.

    ``arr`` has one leading (time/window) axis; entry (t, i) becomes the l^p
    aggregate of the cells in the ball around edge i (p-th power times measure
    for finite p, plain max for p = inf).
    """
    a = np.abs(arr)
    if math.isinf(p):
        shape = kernel.shape
        origins = [lo + s // 2 for lo, s in zip(o_mins, shape)]
        return ndimage.maximum_filter(a, footprint=(kernel > 0)[None],
                                      mode="constant", cval=0.0, origin=[0] + origins)
    rev = kernel[tuple(slice(None, None, -1) for _ in kernel.shape)]
    conv = signal.fftconvolve(a**p, rev[None], mode="full", axes=tuple(range(1, a.ndim)))
    sl = [slice(None)]
    for k, lo in enumerate(o_mins):
        o_max = lo + kernel.shape[k] - 1
        sl.append(slice(o_max, o_max + arr.shape[1 + k]))
    return np.maximum(conv[tuple(sl)], 0.0) * cellvol


def _localized_norm_fft(f: GridFunction, spec: MixedNormSpec, st_t, st_x, radius: float) -> float:
    kernel, o_mins = _ball_kernel(f.dx, radius)
    to_min, to_max = _offset_range(f.dt, radius**2)
    vals = f.values
    sub = (slice(None, None, st_t),) + tuple(slice(None, None, s) for s in st_x)
    if spec.order == "time-outer":
        S = _space_ball_reduce(vals, spec.p, kernel, o_mins, f.cell_volume)
        if math.isinf(spec.q):
            h = S ** (1.0 / spec.p) if not math.isinf(spec.p) else S
            N = _window_max_time(h, to_min, to_max)
        else:
            A = S ** (spec.q / spec.p) if not math.isinf(spec.p) else S**spec.q
            W = _window_sum_time(A, to_min, to_max, f.dt)
            N = W ** (1.0 / spec.q)
        return float(N[sub].max())
    # space-outer: inner time norm per cell and window, then ball reduce
    if math.isinf(spec.q):
        G = _window_max_time(np.abs(vals), to_min, to_max)
    else:
        G = _window_sum_time(np.abs(vals) ** spec.q, to_min, to_max, f.dt) ** (1.0 / spec.q)
    R = _space_ball_reduce(G, spec.p, kernel, o_mins, f.cell_volume)
    if not math.isinf(spec.p):
        R = R ** (1.0 / spec.p)
    return float(R[sub].max())


def _localized_norm_direct(f: GridFunction, spec: MixedNormSpec, st_t, st_x, radius: float) -> float:
    kernel, o_mins = _ball_kernel(f.dx, radius)
    to_min, to_max = _offset_range(f.dt, radius**2)
    vals = f.values
    nt, nx = f.nt, f.nx
    best = 0.0
    for it in range(0, nt, st_t):
        t_lo, t_hi = max(it + to_min, 0), min(it + to_max + 1, nt)
        if t_hi <= t_lo:
            continue
        block = vals[t_lo:t_hi]
        for center in np.ndindex(*[len(range(0, n, s)) for n, s in zip(nx, st_x)]):
            ix = [c * s for c, s in zip(center, st_x)]
            sl = []
            ker_sl = []
            empty = False
            for k in range(f.d):
                lo, hi = ix[k] + o_mins[k], ix[k] + o_mins[k] + kernel.shape[k]
                clo, chi = max(lo, 0), min(hi, nx[k])
                if chi <= clo:
                    empty = True
                    break
                sl.append(slice(clo, chi))
                ker_sl.append(slice(clo - lo, kernel.shape[k] - (hi - chi)))
            if empty:
                continue
            sub = block[(slice(None),) + tuple(sl)] * kernel[tuple(ker_sl)][None]
            val = _reduce_values(sub, spec, f.dt, f.cell_volume)
            if val > best:
                best = val
    return best


def localized_norm(
    f: GridFunction,
    spec: MixedNormSpec,
    lattice_step: float = 0.25,
    radius: float = 1.0,
    method: str = "auto",
) -> float:
    """Sup over shifted cylinders ``[s - r^2, s + r^2] x B_r(z)`` of the windowed norm.

    Window centers run over the sample lattice subsampled to spacing
    ``lattice_step`` (a deliberate, controlled under-approximation of the
    continuum shift supremum).  Always <= ``mixed_norm(f, spec)``.
    """
    if not 0 < lattice_step <= 1:
        raise GridError(f"lattice_step must lie in (0, 1], got {lattice_step}")
    if not radius > 0:
        raise GridError("window radius must be positive")
    st_t, st_x = _strides(f, lattice_step)
    if method == "auto":
        kernel_cells = np.prod([2 * (int(radius / h) + 1) for h in f.dx])
        n_centers = (f.nt / st_t) * np.prod([n / s for n, s in zip(f.nx, st_x)])
        window_cells = (2 * radius**2 / f.dt + 1) * kernel_cells
        method = "direct" if n_centers * window_cells <= _FFT_WORK_THRESHOLD else "fft"
    if method == "fft":
        return _localized_norm_fft(f, spec, st_t, st_x, radius)
    if method == "direct":
        return _localized_norm_direct(f, spec, st_t, st_x, radius)
    raise ValueError(f"unknown method {method!r}")


def localized_spatial_norm(
    values: np.ndarray,
    x0: Sequence[float],
    dx: Sequence[float],
    p: float,
    lattice_step: float = 0.25,
    radius: float = 1.0,
) -> float:
    """Purely spatial localized norm ``sup_z ||1_(B_r(z)) g||_p`` on cell samples."""
    _check_exponent(p, "p")
    values = np.asarray(values, dtype=float)
    dx = tuple(float(h) for h in np.atleast_1d(dx))
    if np.any(np.isnan(values)):
        raise GridError("spatial samples must not contain NaN")
    kernel, o_mins = _ball_kernel(dx, radius)
    st_x = [max(1, int(round(lattice_step / h))) for h in dx]
    a = np.abs(values)[None]
    if math.isinf(p):
        R = _space_ball_reduce(np.where(np.isfinite(a), a, np.inf), INF, kernel, o_mins, 1.0)
    else:
        finite = np.where(np.isfinite(a), a, 0.0)
        R = _space_ball_reduce(finite, p, kernel, o_mins, float(np.prod(dx))) ** (1.0 / p)
        if np.any(~np.isfinite(a)):
            # infinite samples dominate any ball that contains them
            hit = _space_ball_reduce((~np.isfinite(a)).astype(float), INF, kernel, o_mins, 1.0)
            R = np.where(hit > 0, np.inf, R)
    sub = (0,) + tuple(slice(None, None, s) for s in st_x)
    return float(R[sub].max())


def covering_equivalence_report(
    f: GridFunction,
    spec: MixedNormSpec,
    T: float,
    r: float,
    lattice_step: float = 0.25,
) -> tuple[float, float]:
    """Band of per-center ratios between radius-1 and radius-``r`` window norms.

    Windows are ``[0, T] x B_rho(z)`` with ``rho in {1, r}`` and ``z`` running
    over the spatial shift lattice; returns (min, max) of the ratio over the
    centers where the radius-``r`` norm is nonzero.  For ``r = 1`` both windows
    coincide and the band collapses to (1, 1).
    """
    if not 0.5 <= r <= 4.0:
        raise GridError(f"comparison radius must lie in [1/2, 4], got {r}")
    tc = f.t_centers()
    tmask = ((tc >= -1e-12) & (tc < T - 1e-12)).astype(float)
    X = f.meshgrid()
    _, st_x = _strides(f, lattice_step)
    ratios = []
    # centers on the edge lattice (tie-free against cell centers)
    edge_axes = [f.x0[k] + np.arange(0, f.nx[k], st_x[k]) * f.dx[k] for k in range(f.d)]
    for z in np.stack(np.meshgrid(*edge_axes, indexing="ij"), axis=-1).reshape(-1, f.d):
        dist2 = ((X - z) ** 2).sum(axis=-1)
        n1 = mixed_norm_masked(f, spec, tmask, (dist2 <= 1.0 + 1e-12).astype(float))
        nr = mixed_norm_masked(f, spec, tmask, (dist2 <= r**2 * (1 + 1e-12)).astype(float))
        if nr > 0:
            ratios.append(n1 / nr)
    if not ratios:
        return (0.0, 0.0)
    return (float(min(ratios)), float(max(ratios)))


def v_norm(u: GridFunction, kappa: float, lattice_step: float = 0.25) -> float:
    """Localized energy norm: sup-in-time L2 part plus the gradient part.

    ``|||u|||_(L~^(inf,2)_(t,x)) + |||grad u|||_(L~^(kappa,2)_(x,t))`` with the
    gradient by second-order differences honoring the boundary tag.
    """
    if not 1.0 <= kappa <= 2.0:
        raise ExponentError(f"kappa must lie in [1, 2], got {kappa}")
    part1 = localized_norm(u, MixedNormSpec(2.0, INF, "time-outer"), lattice_step)
    grad = gradient_magnitude(u)
    part2 = localized_norm(grad, MixedNormSpec(kappa, 2.0, "space-outer"), lattice_step)
    return part1 + part2


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def save_grid_function(f: GridFunction, path_prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.json`` (header) and ``<prefix>.bin`` (flat float64, C order)."""
    prefix = Path(path_prefix)
    header = {
        "d": f.d,
        "t0": f.t0,
        "dt": f.dt,
        "nt": f.nt,
        "x0": list(f.x0),
        "dx": list(f.dx),
        "nx": list(f.nx),
        "boundary_tag": f.boundary,
    }
    jpath = prefix.with_suffix(".json")
    bpath = prefix.with_suffix(".bin")
    jpath.write_text(json.dumps(header, sort_keys=True, indent=1) + "\n")
    f.values.astype("<f8").tofile(bpath)
    return jpath, bpath


def load_grid_function(path_prefix) -> GridFunction:
    prefix = Path(path_prefix)
    header = json.loads(prefix.with_suffix(".json").read_text())
    vals = np.fromfile(prefix.with_suffix(".bin"), dtype="<f8")
    shape = (header["nt"], *header["nx"])
    vals = vals.reshape(shape)
    return GridFunction(header["t0"], header["dt"], header["x0"], header["dx"], vals,
                        header["boundary_tag"])


def norm_record(op: str, spec: MixedNormSpec | None, value: float, **extra) -> dict:
    """JSON-ready record ``{op, spec, value}`` used by the experiment runner."""
    rec = {"op": op, "spec": spec.label() if spec is not None else None, "value": value}
    rec.update(extra)
    return rec

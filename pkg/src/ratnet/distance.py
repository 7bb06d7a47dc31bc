"""Affine-invariant distance between scalar functions.

The distance between f1 and f2 is the L1 gap minimized over all affine
reparameterizations a*f2(c*x + d) + b, so functions that differ only by
vertical/horizontal scale and shift come out equivalent.  Plain nd() is a
quasi-pseudo-metric (not symmetric); nd_sym() symmetrizes it by taking the
minimum of both directions, and rnd() weights the integrand by an empirical
input density so rarely-visited parts of the domain matter less.

Minimization runs in three stages: a coarse grid over (c, d), a closed-form
weighted least-squares solve for (a, b) inside each grid cell, and a local
Nelder-Mead polish of all four parameters from the best cell.  The simplex
search is written here rather than borrowed so its trajectory depends only
on objective comparisons; scaling the integrand by a positive constant then
provably cannot change the minimizer, which is what makes the uniform-density
rnd agree with nd up to the domain length exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .histogram import Histogram
from .rational import PoleError


@dataclass
class AffineReparam:
    """Vertical scale/shift (a, b) and horizontal scale/shift (c, d)."""

    a: float = 1.0
    b: float = 0.0
    c: float = 1.0
    d: float = 0.0

    def __post_init__(self):
        vals = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("reparameterization values must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=float)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d}


def _default_c_grid() -> np.ndarray:
    pos = np.logspace(-1.0, 1.0, 17)
    return np.concatenate((-pos[::-1], pos))


@dataclass
class DistanceConfig:
    domain: tuple = (-3.0, 3.0)
    quad_points: int = 2001
    c_grid: np.ndarray = field(default_factory=_default_c_grid)
    d_grid: np.ndarray = field(default_factory=lambda: np.linspace(-3.0, 3.0, 13))
    refine_iters: int = 200
    refine_starts: int = 8   # how many best grid cells seed the simplex search
    restarts: int = 2        # simplex re-initializations per start
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError("domain must satisfy lo < hi")
        if self.quad_points < 2:
            raise ValueError("quad_points must be >= 2")
        self.c_grid = np.asarray(self.c_grid, dtype=float)
        self.d_grid = np.asarray(self.d_grid, dtype=float)


def _nodes_and_weights(domain, quad_points):
    """Trapezoidal nodes and weights over the domain."""
    lo, hi = domain
    xs = np.linspace(lo, hi, quad_points)
    h = (hi - lo) / (quad_points - 1)
    w = np.full(quad_points, h)
    w[0] = w[-1] = h / 2.0
    return xs, w


def integrate_abs_diff(f1, f2, rp: AffineReparam, domain=(-3.0, 3.0),
                       quad_points: int = 2001, weights=None) -> float:
    """Trapezoidal quadrature of |f1(x) - (a f2(cx + d) + b)| over the domain.

    ``weights``, when given, is a density evaluated at the quadrature nodes
    (same length) that multiplies the integrand.
    """
    xs, w = _nodes_and_weights(domain, quad_points)
    y1 = np.asarray(f1(xs), dtype=float)
    y2 = np.asarray(f2(rp.c * xs + rp.d), dtype=float)
    if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
        raise ValueError("function values must be finite on the domain")
    integrand = np.abs(y1 - (rp.a * y2 + rp.b))
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != xs.shape:
            raise ValueError("weights must match the quadrature nodes")
        integrand = integrand * weights
    return float(w @ integrand)


def _solve_affine_ls(y1, g, w):
    """Weighted least squares for y1 ~ a*g + b; degenerate g falls back to a=0."""
    sw = float(w.sum())
    swg = float(w @ g)
    swgg = float(w @ (g * g))
    swy = float(w @ y1)
    swgy = float(w @ (g * y1))
    det = swgg * sw - swg * swg
    if abs(det) < 1e-30 or sw <= 0.0:
        if sw <= 0.0:
            return 0.0, 0.0
        return 0.0, swy / sw
    a = (sw * swgy - swg * swy) / det
    b = (swgg * swy - swg * swgy) / det
    return a, b


def _nelder_mead(fn, x0: np.ndarray, max_iters: int, tol: float):
    """Simplex minimization with scale-invariant stopping.

    Every move is decided by comparisons of objective values and termination
    uses the relative f-spread of the simplex, so the trajectory is identical
    for fn and c*fn with any constant c > 0.
    """
    ndim = x0.size
    sim = [x0.astype(float)]
    for i in range(ndim):
        v = x0.astype(float).copy()
        v[i] = v[i] * 1.05 if v[i] != 0.0 else 0.00025
        sim.append(v)
    sim = np.asarray(sim)
    fs = np.array([fn(v) for v in sim])

    for _ in range(max_iters):
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if np.isfinite(fs[0]) and np.isfinite(fs[-1]) and fs[-1] - fs[0] <= tol * abs(fs[0]):
            break
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = fn(xr)
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = fn(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid - 0.5 * (centroid - sim[-1])
            fc = fn(xc)
            if fc < min(fr, fs[-1]):
                sim[-1], fs[-1] = xc, fc
            else:
                for i in range(1, ndim + 1):
                    sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                    fs[i] = fn(sim[i])
    order = np.argsort(fs, kind="stable")
    return sim[order][0], float(fs[order][0])


def _minimize(f1, f2, cfg: DistanceConfig, density=None):
    xs, wq = _nodes_and_weights(cfg.domain, cfg.quad_points)
    w = wq if density is None else wq * density
    y1 = np.asarray(f1(xs), dtype=float)
    if not np.all(np.isfinite(y1)):
        raise ValueError("f1 must be finite on the domain")

    def objective(params) -> float:
        a, b, c, d = params
        try:
            g = np.asarray(f2(c * xs + d), dtype=float)
        except PoleError:
            return np.inf
        with np.errstate(over="ignore", invalid="ignore"):
            vals = w * np.abs(y1 - (a * g + b))
            total = float(vals.sum())
        if not np.isfinite(total):
            return np.inf
        return total

    cells = []
    for c in cfg.c_grid:
        for d in cfg.d_grid:
            try:
                g = np.asarray(f2(c * xs + d), dtype=float)
            except PoleError:
                continue
            if not np.all(np.isfinite(g)):
                continue
            a, b = _solve_affine_ls(y1, g, w)
            val = objective((a, b, c, d))
            if np.isfinite(val):
                cells.append((val, len(cells), np.array([a, b, c, d])))
    if not cells:
        raise ValueError("objective is non-finite over the whole search grid")
    # stable sort on value keeps the earliest (lexicographically smallest)
    # grid cell ahead on ties
    cells.sort(key=lambda t: (t[0], t[1]))
    best_val, _, best = cells[0]

    # polish from the few best cells; a fresh simplex at the incumbent point
    # (restart) recovers from premature simplex collapse
    for start_val, _, start in cells[: cfg.refine_starts]:
        point = start
        for _ in range(cfg.restarts + 1):
            point, val = _nelder_mead(objective, point, cfg.refine_iters, cfg.tol)
            if val < best_val:
                best_val, best = val, point
    a, b, c, d = best
    return best_val, AffineReparam(float(a), float(b), float(c), float(d))


def nd(f1, f2, cfg: DistanceConfig | None = None):
    """Distance from f1 to f2: min over (a,b,c,d) of the weighted L1 gap.

    Returns (value, best reparameterization).  The value is >= 0 and equals
    ~0 exactly when f2 can be affinely reparameterized into f1 on the domain.
    """
    if cfg is None:
        cfg = DistanceConfig()
    return _minimize(f1, f2, cfg)


def nd_sym(f1, f2, cfg: DistanceConfig | None = None) -> float:
    """Symmetrized distance: min(nd(f1, f2), nd(f2, f1))."""
    if cfg is None:
        cfg = DistanceConfig()
    v12, _ = nd(f1, f2, cfg)
    v21, _ = nd(f2, f1, cfg)
    return min(v12, v21)


def density_on_nodes(density, cfg: DistanceConfig) -> np.ndarray:
    """Density values at the quadrature nodes, normalized under the rule.

    Accepts a Histogram (resampled and rescaled so the trapezoid integral is
    exactly 1) or a precomputed array, which must already be normalized to 1
    within 1e-6 under the same rule.
    """
    xs, wq = _nodes_and_weights(cfg.domain, cfg.quad_points)
    if isinstance(density, Histogram):
        rho = density.density(xs)
        mass = float(wq @ rho)
        if mass <= 0.0:
            raise ValueError("density has no mass on the distance domain")
        return rho / mass
    rho = np.asarray(density, dtype=float)
    if rho.shape != xs.shape:
        raise ValueError("density array must match the quadrature nodes")
    if np.any(rho < 0.0) or not np.all(np.isfinite(rho)):
        raise ValueError("density must be finite and non-negative")
    mass = float(wq @ rho)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"density integrates to {mass}, expected 1 "
                         "under the quadrature rule")
    return rho


def rnd(f1, f2, density, cfg: DistanceConfig | None = None):
    """Density-weighted distance: the integrand is multiplied by rho(x).

    ``density`` is a Histogram or an array of node values integrating to 1.
    Regions the inputs never visit contribute nothing, so two activations
    that only differ where the network never evaluates them come out close.
    """
    if cfg is None:
        cfg = DistanceConfig()
    rho = density_on_nodes(density, cfg)
    return _minimize(f1, f2, cfg, density=rho)

"""Yamabe operator and conformal bookkeeping on the radial grid.

The Laplace-Beltrami operator of g = dx^2 + psi^2 h0 acting on radial
functions is v'' + m (psi'/psi) v', equivalently the flux form
psi^-m (psi^m v')', which is the discretization used here: conductances
psi^m at cell midpoints give a tridiagonal stencil whose off-diagonal
couplings are nonnegative on any grid (the sign pattern the monotone solve
relies on) and which is second-order accurate on smoothly graded meshes.
Axisymmetric two-dimensional fields add the polar-angle flux term
psi^-2 (sin theta)^-1 d_theta (sin theta d_theta).

Operators annihilate constant fields exactly in floating point: every
stencil is applied in difference form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import GridError, HypothesisError
from .geometry import ConicMetric, _end_stencil, scalar_curvature_warped, singular_part
from .grid import RadialGrid


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """Positive conformal factor sampled on the grid.

    For near-constant factors (solver output), ``deviation`` stores
    values - base at full absolute precision so that residuals near the cone
    tip are not drowned by cancellation noise; ``values`` is always the
    plain field base + deviation.
    """

    values: np.ndarray
    boundary_constant: float | None = None
    fitted_exponent: float | None = None
    base: float = 0.0
    deviation: np.ndarray | None = None

    @classmethod
    def from_deviation(cls, base: float, deviation: np.ndarray,
                       **kw) -> "ConformalFactor":
        deviation = np.asarray(deviation, dtype=float)
        return cls(values=base + deviation, base=float(base), deviation=deviation, **kw)

    def scaled(self, k: float) -> "ConformalFactor":
        """The factor k*u, preserving the precision split."""
        dev = None if self.deviation is None else k * self.deviation
        u0 = None if self.boundary_constant is None else k * self.boundary_constant
        return ConformalFactor(values=k * self.values, boundary_constant=u0,
                               fitted_exponent=self.fitted_exponent,
                               base=k * self.base, deviation=dev)

    def tip_value(self) -> float:
        if self.deviation is not None:
            return self.base + float(np.asarray(self.deviation).reshape(-1)[0])
        return float(np.asarray(self.values).reshape(-1)[0])


def _harmonic_conductances(metric: ConicMetric, x: np.ndarray) -> np.ndarray:
    """Per-interval conductance d / integral of psi^-m.

    The integral splits the exact cone weight (k t)^-m from the smooth
    remainder rho = (k t / psi)^m, which is sampled at the weighted centroid
    of the interval.  The conductance is exact for rigid cones, so the
    stencil reproduces the radial harmonics 1 and x^(1-m) there, and it is
    uniformly second-order on graded meshes even where the spacing is
    comparable to the radius.
    """
    m = metric.m
    k = metric.cone_slope
    a, b = x[:-1], x[1:]
    if m == 2:
        i0 = 1.0 / a - 1.0 / b
        i1 = np.log(b / a)
    else:
        i0 = (a ** (1 - m) - b ** (1 - m)) / (m - 1)
        i1 = (a ** (2 - m) - b ** (2 - m)) / (m - 2)
    t_bar = i1 / i0
    rho = (k * t_bar / np.asarray(metric.psi(t_bar), dtype=float)) ** m
    return (b - a) * k ** m / (rho * i0)


class DiscreteLaplacian:
    """Radial Laplace-Beltrami stencil; optionally with the angular block."""

    def __init__(self, metric: ConicMetric, grid: RadialGrid):
        self.metric = metric
        self.grid = grid
        self.m = metric.m
        x = grid.nodes
        psi = np.asarray(metric.psi(x), dtype=float)
        mu = _harmonic_conductances(metric, x)
        self.conductances = mu
        dm = x[1:-1] - x[:-2]
        dp = x[2:] - x[1:-1]
        w = psi[1:-1] ** self.m * 0.5 * (dm + dp)
        # Couplings to the left/right neighbor at interior nodes 1..n-2.
        self.coupling_left = mu[:-1] / (w * dm)
        self.coupling_right = mu[1:] / (w * dp)
        # One-sided end stencils for Delta = v'' + m(psi'/psi) v', kept in
        # difference form (weights on v_j - v_end).
        self._end = {}
        drift = self.m * np.asarray(metric.dpsi(x), dtype=float) / psi
        for tag, idx, sl in (("tip", 0, slice(0, 4)), ("outer", grid.n - 1, slice(-4, None))):
            w1 = _end_stencil(x[sl], x[idx], 1)
            w2 = _end_stencil(x[sl], x[idx], 2)
            comb = w2 + drift[idx] * w1
            self._end[tag] = (sl, comb)
        self.psi_nodes = psi
        # Angular flux block (axisymmetric unit 2-sphere link).
        if grid.is_axisymmetric:
            if self.m != 2:
                raise GridError("axisymmetric angular grid requires m = 2")
            th = grid.theta_nodes
            dth = np.pi / th.size
            s_minus = np.sin(th - 0.5 * dth)
            s_plus = np.sin(th + 0.5 * dth)
            s_minus[0] = 0.0      # pole flux vanishes with sin(0)
            s_plus[-1] = 0.0      # pole flux vanishes with sin(pi)
            self.theta_minus = s_minus / (np.sin(th) * dth ** 2)
            self.theta_plus = s_plus / (np.sin(th) * dth ** 2)
        else:
            self.theta_minus = self.theta_plus = None

    @property
    def is_axisymmetric(self) -> bool:
        return self.theta_minus is not None

    def _apply_radial(self, f: np.ndarray) -> np.ndarray:
        out = np.empty_like(f)
        a = self.coupling_left
        b = self.coupling_right
        if f.ndim == 2:
            a = a[:, None]
            b = b[:, None]
        out[1:-1] = a * (f[:-2] - f[1:-1]) + b * (f[2:] - f[1:-1])
        for tag in ("tip", "outer"):
            sl, comb = self._end[tag]
            idx = 0 if tag == "tip" else -1
            diff = f[sl] - f[idx]
            out[idx] = np.tensordot(comb, diff, axes=(0, 0))
        return out

    def _apply_theta(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros_like(f)
        tm = self.theta_minus
        tp = self.theta_plus
        out[:, 1:] += tm[1:] * (f[:, :-1] - f[:, 1:])
        out[:, :-1] += tp[:-1] * (f[:, 1:] - f[:, :-1])
        return out / self.psi_nodes[:, None] ** 2

    def apply(self, field: np.ndarray) -> np.ndarray:
        """Delta applied node-wise; accepts (n,) or (n, n_theta) fields."""
        f = np.asarray(field, dtype=float)
        if self.is_axisymmetric and f.ndim == 2:
            return self._apply_radial(f) + self._apply_theta(f)
        if f.ndim != 1:
            raise GridError("1D operator got a 2D field (grid has no theta nodes)")
        return self._apply_radial(f)


def laplacian_coefficients(g: ConicMetric, grid: RadialGrid) -> DiscreteLaplacian:
    """Discrete Laplace-Beltrami operator data for the metric on the grid."""
    psi = g.psi(grid.nodes)
    if np.any(psi <= 0.0):
        raise ValueError("warping must be positive on the grid")
    return DiscreteLaplacian(g, grid)


@dataclass(frozen=True, eq=False)
class YamabeContext:
    """Everything the semilinear curvature equation needs on one grid.

    The residual is  P u = Delta u - a S u - a u^power  with
    a = (m-1)/(4m) and power = (m+3)/(m-1); P u = 0 exactly when the
    conformal metric u^(4/(m-1)) g has scalar curvature -1.
    """

    m: int
    a: float
    power: float
    S: np.ndarray
    laplacian: DiscreteLaplacian
    grid: RadialGrid
    metric: ConicMetric

    def with_curvature(self, s_field: np.ndarray) -> "YamabeContext":
        return replace(self, S=np.asarray(s_field, dtype=float))


def yamabe_context(g: ConicMetric, grid: RadialGrid,
                   boundedness_tol: float = 1e-8) -> YamabeContext:
    """Build the equation context; requires bounded scalar curvature.

    Raises :class:`HypothesisError` when the tip-singular parts of the
    curvature do not vanish (the solvability analysis needs S bounded).
    """
    theta = grid.theta_nodes if grid.is_axisymmetric else None
    coef, trace_term = singular_part(g, theta)
    if np.max(np.abs(np.atleast_1d(coef))) > boundedness_tol or \
            abs(trace_term) > boundedness_tol:
        raise HypothesisError(
            "scalar curvature is unbounded at the cone tip "
            f"(x^-2 coefficient {np.max(np.abs(np.atleast_1d(coef))):.3g}, "
            f"x^-1 trace term {trace_term:.3g}); "
            "the boundary link must have scalar curvature m(m-1) and "
            "vanishing x-derivative trace")
    s = scalar_curvature_warped(g, grid.nodes, theta)
    s = np.asarray(s, dtype=float)
    if s.ndim == 0:
        s = np.full(grid.n, float(s))
    m = g.m
    return YamabeContext(m=m, a=(m - 1) / (4.0 * m), power=(m + 3) / (m - 1),
                         S=s, laplacian=laplacian_coefficients(g, grid),
                         grid=grid, metric=g)


def _laplacian_of(ctx: YamabeContext, u: ConformalFactor) -> np.ndarray:
    field = u.deviation if u.deviation is not None else u.values
    return ctx.laplacian.apply(field)


def yamabe_residual(ctx: YamabeContext, u: ConformalFactor) -> np.ndarray:
    """Node-wise P u; zero exactly where the deformed curvature equals -1."""
    v = np.asarray(u.values, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("conformal factor must be positive on the grid")
    lap = _laplacian_of(ctx, u)
    return lap - ctx.a * ctx.S * v - ctx.a * v ** ctx.power


def conformal_scalar_curvature(ctx: YamabeContext, u: ConformalFactor) -> np.ndarray:
    """Scalar curvature of u^(4/(m-1)) g, node-wise."""
    v = np.asarray(u.values, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("conformal factor must be positive on the grid")
    lap = _laplacian_of(ctx, u)
    return (ctx.S * v - (4.0 * ctx.m / (ctx.m - 1)) * lap) / v ** ctx.power


def conformal_volume_factor(ctx: YamabeContext, u: ConformalFactor) -> np.ndarray:
    """dVol(u^(4/(m-1)) g) / dVol(g) = u^(2(m+1)/(m-1))."""
    return np.asarray(u.values, dtype=float) ** (2.0 * (ctx.m + 1) / (ctx.m - 1))


# ---------------------------------------------------------------------------
# Boundary expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreservationReport:
    preserves: bool
    u0: float
    exponent: float
    note: str = ""


def loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y against log x; returns (slope, rms residual)."""
    lx = np.log(x)
    ly = np.log(y)
    coef = np.polynomial.polynomial.polyfit(lx, ly, 1)
    fitted = coef[0] + coef[1] * lx
    rms = float(np.sqrt(np.mean((ly - fitted) ** 2)))
    return float(coef[1]), rms


def conic_preservation(u: ConformalFactor, grid: RadialGrid,
                       fit_window: tuple[float, float] | None = None,
                       threshold: float = 1.9,
                       noise_floor: float = 1e-13) -> PreservationReport:
    """Decide whether u g is again a conic metric.

    The criterion is the boundary expansion u = u0 + O(x^2) with a positive
    constant u0: the exponent is measured by a log-log fit of |u - u0| over
    a one-decade window (default [x_max/100, x_max/10]).
    """
    v = np.asarray(u.values, dtype=float)
    if v.ndim != 1:
        raise GridError("conic preservation expects a radial factor")
    x = grid.nodes
    if fit_window is None:
        fit_window = (grid.x_max / 100.0, grid.x_max / 10.0)
    lo, hi = fit_window
    if hi > grid.x_max / 2.0 + 1e-12:
        raise GridError("fit window must sit inside (0, x_max/2)")
    idx = grid.window_indices(lo, hi)
    if idx.size < 8:
        raise GridError(f"fit window holds {idx.size} nodes; need at least 8")

    # A factor diverging at the tip has no boundary constant at all.
    tip = grid.window_indices(x[0], grid.x_max / 100.0)
    if tip.size >= 4 and np.all(v[tip] > 0.0):
        tip_slope, _ = loglog_slope(x[tip], v[tip])
        if tip_slope < -0.05:
            return PreservationReport(False, math.nan, tip_slope,
                                      "factor diverges at the tip")

    if u.deviation is not None:
        dev = np.asarray(u.deviation, dtype=float)
        u0 = u.base + dev[0]
        data = np.abs(dev - dev[0])[idx]
    else:
        u0 = float(v[0])
        data = np.abs(v - u0)[idx]

    scale = max(1.0, abs(u0))
    if float(np.max(data)) <= noise_floor * scale:
        return PreservationReport(u0 > 0.0, u0, math.inf,
                                  "indistinguishable from constant")
    keep = data > 0.0
    slope, rms = loglog_slope(x[idx][keep], data[keep])
    preserves = bool(slope >= threshold and u0 > 0.0)
    return PreservationReport(preserves, u0, slope,
                              "" if rms < 0.5 else f"fit residual {rms:.2f}")


@dataclass(frozen=True)
class RescaledBoundary:
    link_curvature: float
    t_coefficient: float


def rescaled_boundary_metric(u0: float, alpha: float,
                             h0_curvature: float) -> RescaledBoundary:
    """Boundary data after the conformal factor u ~ u0 x^alpha.

    The rescaled link curvature is (alpha+2)^2/4 times the original, and the
    new boundary defining function starts as
    t = 2 sqrt(u0) x^((alpha+2)/2) / (alpha+2).
    """
    if alpha <= -2.0:
        raise ValueError(f"alpha must exceed -2, got {alpha}")
    if u0 <= 0.0:
        raise ValueError(f"u0 must be positive, got {u0}")
    s_new = (alpha + 2.0) ** 2 / 4.0 * h0_curvature
    t_coef = 2.0 * math.sqrt(u0) / (alpha + 2.0)
    return RescaledBoundary(link_curvature=s_new, t_coefficient=t_coef)


def conformal_warp_profile(g: ConicMetric, grid: RadialGrid,
                           u: ConformalFactor) -> tuple[np.ndarray, np.ndarray]:
    """Arc-length reparametrization of u^(4/(m-1)) g as a warped metric.

    For radial u the conformal metric is again a warped product in the new
    boundary function t with dt = u^(2/(m-1)) dx; returns (t nodes, new
    warping samples) so the finite-difference curvature path can be run on
    the transformed metric.
    """
    v = np.asarray(u.values, dtype=float)
    if v.ndim != 1:
        raise GridError("expected a radial conformal factor")
    x = grid.nodes
    r = v ** (2.0 / (g.m - 1))
    t = np.empty_like(x)
    t[0] = r[0] * x[0]
    t[1:] = t[0] + np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(x))
    return t, r * np.asarray(g.psi(x), dtype=float)

"""Warped-product conic metrics and their curvature invariants.

A metric here has the near-tip form  g = dx^2 + psi(x)^2 h0(y; dy)  on
(0, x_max] x Y^m, where (Y, h0) is a closed m-manifold known through its
scalar curvature (a constant, or an axisymmetric profile over the polar
angle on a 2-sphere) and its total volume.  Writing g = dx^2 + x^2 h(x)
with h(x) = (psi(x)/x)^2 h0, the boundary link metric is h(0) =
psi'(0)^2 h0.

All operations are pure functions of immutable inputs; grid-wise
evaluations are data-parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import HypothesisError
from .grid import RadialGrid

CONSTANT_LINK = "constant"
AXISYMMETRIC_LINK = "axisymmetric"


def sphere_volume(m: int) -> float:
    """Volume of the unit round m-sphere."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def sphere_curvature(m: int) -> float:
    """Scalar curvature of the unit round m-sphere: m(m-1)."""
    return float(m * (m - 1))


@dataclass(frozen=True)
class LinkMetric:
    """Closed m-dimensional cross-section of the cone.

    ``curvature`` is the scalar-curvature constant for a constant-curvature
    link, or a callable theta -> S(h0)(theta) for the axisymmetric 2-sphere
    model.  ``volume`` is the total Riemannian volume of (Y, h0); the unit
    round sphere volume is the default used by the catalog.
    """

    dim_m: int
    kind: str = CONSTANT_LINK
    curvature: float | Callable[[np.ndarray], np.ndarray] = None  # type: ignore[assignment]
    volume: float | None = None

    def __post_init__(self):
        if self.dim_m < 2:
            raise ValueError(f"link dimension must be >= 2, got {self.dim_m}")
        if self.kind not in (CONSTANT_LINK, AXISYMMETRIC_LINK):
            raise ValueError(f"unknown link kind {self.kind!r}")
        if self.kind == AXISYMMETRIC_LINK and self.dim_m != 2:
            raise ValueError("axisymmetric sphere link requires dim_m = 2")
        if self.curvature is None:
            object.__setattr__(self, "curvature", sphere_curvature(self.dim_m))
        if self.volume is None:
            object.__setattr__(self, "volume", sphere_volume(self.dim_m))
        if self.kind == CONSTANT_LINK and not np.isfinite(float(self.curvature)):
            raise ValueError("link scalar curvature must be finite")

    @property
    def is_constant_curvature(self) -> bool:
        return self.kind == CONSTANT_LINK or not callable(self.curvature)

    def curvature_values(self, theta: np.ndarray | None = None) -> np.ndarray:
        """Scalar curvature samples; shape () for constants, (n_theta,) otherwise."""
        if callable(self.curvature):
            if theta is None:
                raise ValueError("axisymmetric link needs theta samples")
            vals = np.asarray(self.curvature(np.asarray(theta, dtype=float)), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError("link curvature profile has non-finite samples")
            return vals
        return np.asarray(float(self.curvature))


def unit_round_sphere(m: int) -> LinkMetric:
    return LinkMetric(dim_m=m)


def scaled_link(m: int, curvature: float) -> LinkMetric:
    """Abstract constant-curvature link with prescribed S(h0)."""
    return LinkMetric(dim_m=m, curvature=float(curvature))


@dataclass(frozen=True)
class Warping:
    """Radial warping psi with analytic first and second derivatives.

    ``slope0`` and ``curv0`` are the one-sided limits psi'(0+) and psi''(0+),
    supplied analytically by each catalog builder so that boundary data never
    relies on finite differencing.  ``dpsi_excess``, when provided, evaluates
    psi'(x) - slope0 without subtractive cancellation; curvature evaluations
    use it to stay accurate at nodes where psi' - slope0 = O(x^2) underflows
    the direct difference.
    """

    name: str
    psi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    d2psi: Callable[[np.ndarray], np.ndarray]
    slope0: float
    curv0: float
    rigid: bool = False
    rigid_radius: float = 0.0
    params: tuple = ()
    dpsi_excess: Callable[[np.ndarray], np.ndarray] | None = None


NEUMANN_CAP = "neumann-cap"


@dataclass(frozen=True)
class ConicMetric:
    """Warped-product conic metric g = dx^2 + psi(x)^2 h0 on (0, x_max]."""

    link: LinkMetric
    warping: Warping
    x_max: float
    outer_condition: str = NEUMANN_CAP

    def __post_init__(self):
        if self.x_max <= 0.0:
            raise ValueError(f"x_max must be positive, got {self.x_max}")
        if self.outer_condition != NEUMANN_CAP:
            raise ValueError(f"unsupported outer condition {self.outer_condition!r}")
        if self.warping.slope0 <= 0.0:
            raise ValueError("conic form requires psi(x)/x -> k > 0 at the tip")
        probe = self.psi(np.linspace(self.x_max / 64.0, self.x_max, 65))
        if np.any(probe <= 0.0) or not np.all(np.isfinite(probe)):
            raise ValueError("warping must be positive and finite on (0, x_max]")

    @property
    def m(self) -> int:
        return self.link.dim_m

    @property
    def rigid(self) -> bool:
        return self.warping.rigid

    def psi(self, x):
        return self.warping.psi(np.asarray(x, dtype=float))

    def dpsi(self, x):
        return self.warping.dpsi(np.asarray(x, dtype=float))

    def d2psi(self, x):
        return self.warping.d2psi(np.asarray(x, dtype=float))

    @property
    def cone_slope(self) -> float:
        """k = psi'(0+); the boundary link metric is k^2 h0."""
        return self.warping.slope0

    def boundary_link_curvature(self, theta: np.ndarray | None = None):
        """Scalar curvature of the boundary link metric h(0) = k^2 h0."""
        return self.link.curvature_values(theta) / self.cone_slope ** 2

    @property
    def trace_x_derivative_at_boundary(self) -> float:
        """sum_kl h^{kl} d(h_kl)/dx at x = 0 for h(x) = (psi/x)^2 h0.

        Equals m * psi''(0)/psi'(0); it vanishes exactly when the mean
        curvature of the level sets is asymptotic to the rigid-cone value.
        """
        return self.m * self.warping.curv0 / self.warping.slope0

    def log_sqrt_det_rate(self, x):
        """d/dx log sqrt(det h(x)) = m (psi'/psi - 1/x); bounded at the tip."""
        x = np.asarray(x, dtype=float)
        return self.m * (self.dpsi(x) / self.psi(x) - 1.0 / x)


# ---------------------------------------------------------------------------
# Finite differencing on non-uniform node sets
# ---------------------------------------------------------------------------

def _end_stencil(xs: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Weights of a one-sided derivative stencil through the points ``xs``.

    Solves the small Vandermonde system so the stencil is exact on
    polynomials of degree len(xs)-1.
    """
    d = xs - x0
    k = d.size
    v = np.vander(d, k, increasing=True).T  # v[r, c] = d_c**r
    rhs = np.zeros(k)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(v, rhs)


def fd_first_derivative(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a non-uniform grid.

    Centered three-point formula in the interior, four-point one-sided
    stencils at both ends.  Stencils are applied in difference form so that
    constant fields differentiate to exactly zero in floating point.
    """
    x = np.asarray(nodes, dtype=float)
    f = np.asarray(values, dtype=float)
    out = np.empty_like(f)
    dm = x[1:-1] - x[:-2]
    dp = x[2:] - x[1:-1]
    wl = -dp / (dm * (dm + dp))
    wr = dm / (dp * (dm + dp))
    out[1:-1] = wl * (f[:-2] - f[1:-1]) + wr * (f[2:] - f[1:-1])
    for idx, sl in ((0, slice(0, 4)), (-1, slice(-4, None))):
        w = _end_stencil(x[sl], x[idx], 1)
        base = f[idx]
        out[idx] = float(np.dot(w, f[sl] - base))
    return out


def fd_second_derivative(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second derivative on a non-uniform grid.

    Direct three-point formula in the interior (second-order on smoothly
    graded meshes), four-point one-sided stencils at the ends.  Applied in
    difference form so constants map to exactly zero.
    """
    x = np.asarray(nodes, dtype=float)
    f = np.asarray(values, dtype=float)
    out = np.empty_like(f)
    dm = x[1:-1] - x[:-2]
    dp = x[2:] - x[1:-1]
    wl = 2.0 / (dm * (dm + dp))
    wr = 2.0 / (dp * (dm + dp))
    out[1:-1] = wl * (f[:-2] - f[1:-1]) + wr * (f[2:] - f[1:-1])
    for idx, sl in ((0, slice(0, 4)), (-1, slice(-4, None))):
        w = _end_stencil(x[sl], x[idx], 2)
        base = f[idx]
        out[idx] = float(np.dot(w, f[sl] - base))
    return out


def observed_orders(errors: list[float]) -> list[float]:
    """log2 error ratios between successive grid doublings."""
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

def scalar_curvature_warped(g: ConicMetric, x, theta: np.ndarray | None = None):
    """Exact scalar curvature of the warped metric at radius x (and angle).

    S(g) = psi^-2 [ S(h0)(y) - 2 m psi psi'' - m(m-1) (psi')^2 ].

    When the warping supplies the excess delta = psi' - psi'(0) analytically,
    the bracket is regrouped as

        [S(h0) - m(m-1) k^2] - m(m-1) delta (delta + 2k) - 2 m psi psi''

    with k = psi'(0); every term is then O(x^2)-small near a bounded-curvature
    tip and the evaluation carries no subtractive cancellation, so node values
    are accurate to relative machine precision arbitrarily close to x = 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x > g.x_max * (1 + 1e-12)):
        raise ValueError("x must lie in (0, x_max]")
    psi = np.asarray(g.psi(x), dtype=float)
    d2psi = np.asarray(g.d2psi(x), dtype=float)
    if not np.all(np.isfinite(d2psi)):
        raise ValueError("warping derivatives are non-finite at the requested radius")
    m = g.m
    s_link = np.asarray(g.link.curvature_values(theta), dtype=float)
    excess = g.warping.dpsi_excess
    if excess is not None:
        k = g.warping.slope0
        delta = np.asarray(excess(x), dtype=float)
        if not np.all(np.isfinite(delta)):
            raise ValueError("warping derivative excess is non-finite")
        head = s_link - m * (m - 1) * k ** 2   # exactly zero when normalized
        tail = m * (m - 1) * delta * (delta + 2.0 * k) + 2.0 * m * psi * d2psi
    else:
        dpsi = np.asarray(g.dpsi(x), dtype=float)
        if not np.all(np.isfinite(dpsi)):
            raise ValueError("warping derivatives are non-finite at the requested radius")
        head = s_link + 0.0 * s_link
        tail = m * (m - 1) * dpsi ** 2 + 2.0 * m * psi * d2psi
    if s_link.ndim == 1 and x.ndim == 1:
        # (x, theta) field: radial terms down the rows, link samples across.
        return (head[None, :] - tail[:, None]) / psi[:, None] ** 2
    return (head - tail) / psi ** 2


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """Node-wise scalar curvature with its tip-singularity diagnosis.

    ``singular_coefficient`` extrapolates S * x^2 to x = 0;
    ``bounded_at_boundary`` records whether that coefficient vanishes within
    the stated tolerance (the x^-1 trace obstruction is reported separately
    by :func:`singular_part`).
    """

    grid: RadialGrid
    scalar_curvature: np.ndarray
    singular_coefficient: float
    bounded_at_boundary: bool
    tolerance: float = 1e-8

    def s_times_x2(self) -> np.ndarray:
        x = self.grid.nodes
        s = self.scalar_curvature
        if s.ndim == 2:
            return s * (x ** 2)[:, None]
        return s * x ** 2

    def rows(self):
        """(x, S, S*x^2) triples for CSV export (theta-averaged in 2D)."""
        s = self.scalar_curvature
        if s.ndim == 2:
            s = s.mean(axis=1)
        return zip(self.grid.nodes, s, s * self.grid.nodes ** 2)


def _fit_singular_coefficient(grid: RadialGrid, s_values: np.ndarray,
                              tol: float) -> tuple[float, bool]:
    """Extrapolate S*x^2 to x = 0 through the three innermost nodes.

    Quadratic Lagrange extrapolation kills the 1/x and bounded parts of S
    exactly, so the intercept isolates the x^-2 coefficient to O(x_tip^3).
    """
    x = grid.nodes
    s = s_values if s_values.ndim == 1 else s_values.mean(axis=1)
    xs = x[:3]
    ys = (s * x ** 2)[:3]
    intercept = 0.0
    for j in range(3):
        basis = 1.0
        for l in range(3):
            if l != j:
                basis *= (0.0 - xs[l]) / (xs[j] - xs[l])
        intercept += ys[j] * basis
    return float(intercept), abs(intercept) <= tol


def scalar_curvature_warped_profile(g: ConicMetric, grid: RadialGrid,
                                    tol: float = 1e-8) -> CurvatureProfile:
    """Curvature profile through the exact warped-product formula."""
    if grid.is_axisymmetric:
        s = scalar_curvature_warped(g, grid.nodes, grid.theta_nodes)
    else:
        s = np.asarray(scalar_curvature_warped(g, grid.nodes), dtype=float)
        if s.ndim == 0:
            s = np.full(grid.n, float(s))
    coef, bounded = _fit_singular_coefficient(grid, np.asarray(s), tol)
    return CurvatureProfile(grid, np.asarray(s), coef, bounded, tol)


def fd_scalar_curvature_values(nodes: np.ndarray, psi_values: np.ndarray,
                               link_curvature, m: int) -> np.ndarray:
    """Scalar curvature from sampled metric components by finite differences.

    Assembles the radial Christoffel data of g = dx^2 + p(x) h0 (p = psi^2)
    from the node samples, differentiates the assembled fields numerically,
    and contracts:

        S = S(h0)/p - m p''/p + m(3-m) q^2,      q = p'/(2p).

    The grouping uses the curvature symmetries so that only the smooth
    second-fundamental-form field (proportional to p') is differentiated;
    the mixed Christoffel coefficient q, which blows up like 1/x at the tip,
    enters algebraically only.  The link-internal contribution enters
    through its scalar curvature, which is the supplied data for both link
    models.  Singular metric data at a node raises with the offending node
    index.
    """
    x = np.asarray(nodes, dtype=float)
    psi = np.asarray(psi_values, dtype=float)
    p = psi ** 2
    bad = np.nonzero(~np.isfinite(p) | (p <= 0.0))[0]
    if bad.size:
        raise HypothesisError(f"singular metric matrix at node {bad[0]} (x={x[bad[0]]:.6g})")
    p1 = fd_first_derivative(x, p)
    q = p1 / (2.0 * p)
    p2 = fd_second_derivative(x, p)
    s_link = np.asarray(link_curvature, dtype=float)
    radial = -m * p2 / p + m * (3 - m) * q ** 2
    if s_link.ndim == 1:
        return s_link[None, :] / p[:, None] + radial[:, None]
    return s_link / p + radial


def scalar_curvature_fd(g: ConicMetric, grid: RadialGrid,
                        tol: float = 1e-8) -> CurvatureProfile:
    """Finite-difference curvature profile (oracle path for the warped formula)."""
    s_link = g.link.curvature_values(grid.theta_nodes if grid.is_axisymmetric else None)
    s = fd_scalar_curvature_values(grid.nodes, g.psi(grid.nodes), s_link, g.m)
    coef, bounded = _fit_singular_coefficient(grid, np.asarray(s), tol)
    return CurvatureProfile(grid, np.asarray(s), coef, bounded, tol)


def singular_part(g: ConicMetric, theta: np.ndarray | None = None):
    """Boundary-singular data of the scalar curvature.

    Returns ``(coefficient_of_x2, trace_term)`` where the first entry is
    S(h(0)) - m(m-1) (a number for constant-curvature links, an array of
    theta samples otherwise) and the second is -m * trace, the coefficient
    multiplying 1/x in the obstruction normal form.  Both vanish exactly when
    the scalar curvature stays bounded at the tip.
    """
    m = g.m
    coef = g.boundary_link_curvature(theta) - m * (m - 1)
    trace_term = -m * g.trace_x_derivative_at_boundary
    return coef, trace_term


def is_boundary_bounded(g: ConicMetric, tol: float = 1e-8,
                        theta: np.ndarray | None = None) -> bool:
    """Boundedness predicate: both singular parts vanish within ``tol``."""
    if theta is None and not g.link.is_constant_curvature:
        theta = np.linspace(0.05, np.pi - 0.05, 64)
    coef, trace_term = singular_part(g, theta)
    return bool(np.all(np.abs(coef) <= tol) and abs(trace_term) <= tol)


def mean_curvature_trace(g: ConicMetric, x):
    """Trace of the shape operator of the level set {x = const}: -m psi'/psi."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("x must be positive")
    return -g.m * g.dpsi(x) / g.psi(x)


def volume_element(g: ConicMetric, x):
    """Radial volume density psi(x)^m times the total link volume."""
    x = np.asarray(x, dtype=float)
    return g.psi(x) ** g.m * g.link.volume

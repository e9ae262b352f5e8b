"""Explicit sub/supersolution pair with certified constants.

The supersolution is b(c - x) near the tip and the constant b(c - eps)
outside, the subsolution c(b + x eps) near the tip and c(b + eps^2)
outside; both are smoothed over [eps/2, 3eps/2] by a quintic-smoothstep
blend of the derivative, which yields the explicit mollifier bound
B = 15/8 (the maximum slope of the smoothstep).  The constants are chosen
deterministically: eps at its cap, each c at the midpoint of its admissible
interval, each b at 1.25 times the smallest admissible value.  Every
inequality used in the sign analysis is recorded in a machine-checkable
ledger and re-verified after construction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .conformal import ConformalFactor, YamabeContext, yamabe_residual
from .errors import ConstructionError, GridError, HypothesisError
from .grid import RadialGrid

logger = logging.getLogger(__name__)

MOLLIFIER_BOUND = 15.0 / 8.0  # max |d/ds (6s^5 - 15s^4 + 10s^3)| on [0, 1]


def _smoothstep(s: np.ndarray) -> np.ndarray:
    return s ** 3 * (6.0 * s ** 2 - 15.0 * s + 10.0)


def _smoothstep_integral(s: np.ndarray) -> np.ndarray:
    # integral of the smoothstep from 0 to s; equals 1/2 at s = 1
    return s ** 6 - 3.0 * s ** 5 + 2.5 * s ** 4


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    relation: str  # "<=", "<", ">=", ">"
    satisfied: bool

    @classmethod
    def of(cls, name: str, lhs: float, rhs: float, relation: str) -> "InequalityCheck":
        ok = {"<=": lhs <= rhs, "<": lhs < rhs,
              ">=": lhs >= rhs, ">": lhs > rhs}[relation]
        return cls(name, float(lhs), float(rhs), relation, bool(ok))

    def to_json_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "relation": self.relation, "satisfied": self.satisfied}


@dataclass(frozen=True)
class BarrierConstants:
    """All scalars of the barrier construction plus the inequality ledger."""

    m: int
    a: float
    eps: float
    A: float
    B: float
    s_bar: float
    s_under: float
    sup_b: float
    sup_c: float
    sub_b: float
    sub_c: float
    x_outer: float
    checks: tuple[InequalityCheck, ...] = field(default=(), compare=False)

    def verify(self) -> tuple[InequalityCheck, ...]:
        """Evaluate every construction inequality literally."""
        m, a, eps, A, B = self.m, self.a, self.eps, self.A, self.B
        sb, sc = self.sup_b, self.sup_c
        ub, uc = self.sub_b, self.sub_c
        q = (m - 1) / 4.0
        super_b_floor = ((B / eps + A + a * (sc - eps) * self.s_bar)
                         / (a * (sc - eps) ** ((m + 3) / (m - 1)))) ** q
        checks = (
            InequalityCheck.of("eps-cap", eps,
                               min(m / (8.0 * A), self.x_outer / 2.0, A / m), "<="),
            InequalityCheck.of("A-floor", 1.0, A, "<="),
            InequalityCheck.of("eps-mollifier-cap", eps, B / A, "<="),
            InequalityCheck.of("super-positivity", 2.0 * eps, sc, "<"),
            InequalityCheck.of("super-product", self.s_bar ** q, (sc - eps) * sb, "<="),
            InequalityCheck.of("super-c-cap", sc, m / (2.0 * A), "<="),
            InequalityCheck.of("super-b-floor", super_b_floor, sb, "<="),
            InequalityCheck.of("sub-unit-cap", uc, 1.0 / (ub + eps), "<"),
            InequalityCheck.of("sub-amplitude-cap", uc,
                               (self.s_under / 2.0) ** q / (ub + eps ** 2), "<="),
            InequalityCheck.of("sub-interior-cap", uc,
                               m ** q / (a ** q * (ub + eps ** 2 / 2.0) ** ((m + 3) / 4.0)),
                               "<="),
            InequalityCheck.of("sub-b-floor", 4.0 * B / (a * self.s_under), ub, "<"),
        )
        return checks

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "m": self.m, "a": self.a, "eps": self.eps, "A": self.A, "B": self.B,
            "s_bar": self.s_bar, "s_under": self.s_under,
            "sup_b": self.sup_b, "sup_c": self.sup_c,
            "sub_b": self.sub_b, "sub_c": self.sub_c,
            "inequalities": [c.to_json_dict() for c in self.checks],
        }


def _radial_extrema(ctx: YamabeContext) -> tuple[np.ndarray, np.ndarray]:
    """Per-radius max and min of S (identical for radial curvature fields)."""
    s = ctx.S
    if s.ndim == 2:
        return s.max(axis=1), s.min(axis=1)
    return s, s


def choose_constants(ctx: YamabeContext, safety: float = 1.25) -> BarrierConstants:
    """Pick (eps, A, B, s_bar, s_under, b, c) for both barriers.

    Follows the ordering of the sign analysis: eps is fixed from the collar
    bound A, the curvature extrema over {x >= eps/2} fix s_bar and s_under,
    the supersolution c comes before its b, and the subsolution b before its
    c.  Requires strictly negative scalar curvature; raises
    :class:`HypothesisError` otherwise, and :class:`ConstructionError` when
    the curvature infimum vanishes on the outer region (the subsolution
    b-floor divides by it).
    """
    g = ctx.metric
    grid = ctx.grid
    x = grid.nodes
    s_hi, s_lo = _radial_extrema(ctx)
    if float(s_hi.max()) >= 0.0:
        node = int(np.argmax(s_hi))
        raise HypothesisError(
            f"scalar curvature must be negative on the whole domain; "
            f"S = {s_hi.max():.6g} at x = {x[node]:.6g}")
    m = ctx.m
    a = ctx.a
    h_rate = np.abs(np.asarray(g.log_sqrt_det_rate(x), dtype=float))
    A = float(max(1.0, h_rate.max(), np.max(np.abs(a * x * s_hi)),
                  np.max(np.abs(a * x * s_lo))))
    B = MOLLIFIER_BOUND
    eps = min(m / (8.0 * A), g.x_max / 2.0, A / m, B / A)
    annulus = x >= eps / 2.0
    s_bar = float(max(1.0, np.abs(s_lo[annulus]).max(), np.abs(s_hi[annulus]).max()))
    s_under = float(np.minimum(np.abs(s_lo), np.abs(s_hi))[annulus].min())
    if s_under <= 1e-12 * s_bar:
        raise ConstructionError(
            f"|S| has infimum {s_under:.3g} on x >= eps/2 = {eps / 2:.6g}; "
            "the subsolution b-floor b > 4B/(a inf|S|) is unsatisfiable")

    q = (m - 1) / 4.0
    sup_c = 0.5 * (2.0 * eps + m / (2.0 * A))
    super_b_floor = ((B / eps + A + a * (sup_c - eps) * s_bar)
                     / (a * (sup_c - eps) ** ((m + 3) / (m - 1)))) ** q
    sup_b = safety * max(1.0 / eps, s_bar ** q / (sup_c - eps), super_b_floor)

    sub_b = safety * 4.0 * B / (a * s_under)
    sub_c = 0.5 * min(1.0 / (sub_b + eps),
                      (s_under / 2.0) ** q / (sub_b + eps ** 2),
                      m ** q / (a ** q * (sub_b + eps ** 2 / 2.0) ** ((m + 3) / 4.0)))

    constants = BarrierConstants(m=m, a=a, eps=eps, A=A, B=B,
                                 s_bar=s_bar, s_under=s_under,
                                 sup_b=sup_b, sup_c=sup_c,
                                 sub_b=sub_b, sub_c=sub_c,
                                 x_outer=g.x_max)
    checks = constants.verify()
    constants = BarrierConstants(**{**constants.__dict__, "checks": checks})
    for c in checks:
        logger.debug("barrier inequality %-18s %c %.6g %s %.6g",
                     c.name, " " if c.satisfied else "!",
                     c.lhs, c.relation, c.rhs)
    if not constants.all_satisfied:
        bad = [c.name for c in checks if not c.satisfied]
        raise ConstructionError(f"barrier constant inequalities failed: {bad}")
    return constants


def _blend_nodes(constants: BarrierConstants, grid: RadialGrid) -> np.ndarray:
    idx = grid.window_indices(constants.eps / 2.0, 1.5 * constants.eps)
    if idx.size < 8:
        raise GridError(
            f"grid resolves the blend window [{constants.eps / 2:.4g}, "
            f"{1.5 * constants.eps:.4g}] with only {idx.size} nodes; need >= 8")
    return idx


def _supersolution_values(constants: BarrierConstants, x: np.ndarray) -> np.ndarray:
    b, c, eps = constants.sup_b, constants.sup_c, constants.eps
    s = np.clip((x - eps / 2.0) / eps, 0.0, 1.0)
    blended = b * (c - eps) + b * eps * (0.5 - s + _smoothstep_integral(s))
    vals = np.where(x <= eps / 2.0, b * (c - x), blended)
    return np.where(x >= 1.5 * eps, b * (c - eps), vals)


def _subsolution_values(constants: BarrierConstants, x: np.ndarray) -> np.ndarray:
    b, c, eps = constants.sub_b, constants.sub_c, constants.eps
    s = np.clip((x - eps / 2.0) / eps, 0.0, 1.0)
    blended = c * (b + eps ** 2 / 2.0) + c * eps ** 2 * (s - _smoothstep_integral(s))
    vals = np.where(x <= eps / 2.0, c * (b + x * eps), blended)
    return np.where(x >= 1.5 * eps, c * (b + eps ** 2), vals)


def _as_factor(values: np.ndarray, grid: RadialGrid) -> ConformalFactor:
    if grid.is_axisymmetric:
        values = np.repeat(values[:, None], grid.n_theta, axis=1)
    return ConformalFactor(values=values, boundary_constant=float(values.flat[0]))


def build_supersolution(constants: BarrierConstants, grid: RadialGrid) -> ConformalFactor:
    """Mollified upper barrier on the grid."""
    _blend_nodes(constants, grid)
    return _as_factor(_supersolution_values(constants, grid.nodes), grid)


def build_subsolution(constants: BarrierConstants, grid: RadialGrid) -> ConformalFactor:
    """Mollified lower barrier on the grid."""
    _blend_nodes(constants, grid)
    return _as_factor(_subsolution_values(constants, grid.nodes), grid)


@dataclass(frozen=True, eq=False)
class BarrierPair:
    phi: ConformalFactor          # subsolution
    psi: ConformalFactor          # supersolution
    constants: BarrierConstants
    residual_margins: tuple[float, float]  # (min P phi, max P psi)


def _implicated(constants: BarrierConstants, x_node: float, side: str) -> str:
    eps = constants.eps
    if x_node < eps / 2.0:
        return "super-c-cap" if side == "super" else "sub-interior-cap"
    if x_node <= 1.5 * eps:
        return "super-b-floor" if side == "super" else "sub-b-floor"
    return "super-product" if side == "super" else "sub-amplitude-cap"


def verify_barrier(ctx: YamabeContext, phi: ConformalFactor, psi: ConformalFactor,
                   constants: BarrierConstants,
                   tol_factor: float = 1e-6) -> tuple[float, float]:
    """Numerically certify P psi <= tol and P phi >= -tol on the grid.

    Returns (min P phi, max P psi).  A sign violation raises with the worst
    node and the construction inequality implicated for that region.
    """
    tol = tol_factor * max(1.0, constants.s_bar)
    p_phi = yamabe_residual(ctx, phi)
    p_psi = yamabe_residual(ctx, psi)
    x = ctx.grid.nodes
    margins = (float(p_phi.min()), float(p_psi.max()))
    if margins[1] > tol:
        node = int(np.unravel_index(np.argmax(p_psi), p_psi.shape)[0])
        raise ConstructionError(
            f"supersolution sign violated: P psi = {margins[1]:.3g} > {tol:.3g} "
            f"at node {node} (x = {x[node]:.6g}); "
            f"inequality implicated: {_implicated(constants, x[node], 'super')}")
    if margins[0] < -tol:
        node = int(np.unravel_index(np.argmin(p_phi), p_phi.shape)[0])
        raise ConstructionError(
            f"subsolution sign violated: P phi = {margins[0]:.3g} < {-tol:.3g} "
            f"at node {node} (x = {x[node]:.6g}); "
            f"inequality implicated: {_implicated(constants, x[node], 'sub')}")
    return margins


def build_barrier_pair(ctx: YamabeContext, tol_factor: float = 1e-6) -> BarrierPair:
    """Choose constants, build both barriers and certify the sign conditions."""
    constants = choose_constants(ctx)
    phi = build_subsolution(constants, ctx.grid)
    psi = build_supersolution(constants, ctx.grid)
    if np.any(phi.values <= 0.0):
        raise ConstructionError("subsolution is not positive on the grid")
    if np.any(phi.values > psi.values):
        raise ConstructionError("barrier ordering phi <= psi fails on the grid")
    margins = verify_barrier(ctx, phi, psi, constants, tol_factor)
    logger.info("barriers certified: min P phi = %.3g, max P psi = %.3g",
                margins[0], margins[1])
    return BarrierPair(phi=phi, psi=psi, constants=constants,
                       residual_margins=margins)

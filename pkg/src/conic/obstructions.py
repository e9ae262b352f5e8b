"""Obstructions to conformal deformation onto constant scalar curvature.

A conic metric can carry a conformal conic metric of constant scalar
curvature only if (1) the boundary link has constant positive scalar
curvature and (2) the x-derivative trace of the link family vanishes at the
tip.  When the link curvature equals m(m-1) the metric is already
normalized; a positive constant other than m(m-1) can be fixed by rescaling
the cone angle.  The exponent analysis quantifies which leading powers
u ~ u0 x^alpha a deforming factor may carry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConicMetric

VERDICT_NORMALIZED = "DeformableNormalized"
VERDICT_RESCALE = "DeformableAfterRescale"
VERDICT_OBSTRUCTED = "Obstructed"


@dataclass(frozen=True)
class AlphaExponents:
    """Roots of the leading-order exponent equation (2a/(m-1)+1)^2 c = m(m-1)."""

    roots: tuple[float, float]
    admissible: tuple[bool, bool]

    def admissible_roots(self) -> list[float]:
        return [r for r, ok in zip(self.roots, self.admissible) if ok]


def alpha_exponents(c: float, m: int) -> AlphaExponents:
    """Exponents alpha = (m-1)/2 (-1 +- sqrt(m(m-1)/c)).

    Each root is flagged by the conic-deformation constraint alpha > -2
    (strict; alpha = -2 collapses the boundary defining function).
    """
    if c <= 0.0:
        raise ValueError(f"link curvature constant must be positive, got {c}")
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    r = math.sqrt(m * (m - 1) / c)
    plus = (m - 1) / 2.0 * (-1.0 + r)
    minus = (m - 1) / 2.0 * (-1.0 - r)
    return AlphaExponents(roots=(plus, minus),
                          admissible=(plus > -2.0, minus > -2.0))


@dataclass(frozen=True)
class AlphaConsistency:
    consistent_only_at_zero: bool
    coefficient_roots: tuple[float, float]
    intersection: tuple[float, ...]


def alpha_consistency(c: float, m: int, tol: float = 1e-10) -> AlphaConsistency:
    """Cross-check the exponent equation against the coefficient equation.

    The residual coefficient of the deformed curvature vanishes for
    alpha^2 + (m-1) alpha - c(m-1)/(4m) + (m-1)^2/4 = 0, with roots
    -(m-1)/2 +- sqrt(c(m-1))/(2 sqrt(m)).  Those roots are compared with
    :func:`alpha_exponents`; since the deforming factor enters the metric as
    u^(4/(m-1)), only roots with alpha > -(m-1)/2 describe genuine conic
    deformations, and on that range the two root sets meet exactly when
    c = m(m-1), and then only at alpha = 0.
    """
    if c <= 0.0:
        raise ValueError(f"link curvature constant must be positive, got {c}")
    half = (m - 1) / 2.0
    dev = math.sqrt(c * (m - 1)) / (2.0 * math.sqrt(m))
    coeff_roots = (-half + dev, -half - dev)
    exp_roots = alpha_exponents(c, m).roots
    cutoff = -half  # multiplier exponent 4 alpha/(m-1) > -2
    common = []
    for p in exp_roots:
        if p <= cutoff:
            continue
        for q in coeff_roots:
            if q > cutoff and abs(p - q) <= tol * max(1.0, abs(p), abs(q)):
                common.append(0.5 * (p + q))
    consistent = bool(common) and all(abs(r) <= tol for r in common)
    return AlphaConsistency(consistent_only_at_zero=consistent,
                            coefficient_roots=coeff_roots,
                            intersection=tuple(common))


@dataclass(frozen=True)
class ObstructionReport:
    link_curvature_constant: bool
    link_curvature_value: float
    trace_condition: bool
    normalized: bool
    admissible_alpha: tuple[float, ...]
    verdict: str
    detail: str

    def to_json_dict(self) -> dict:
        return {
            "link_curvature_constant": self.link_curvature_constant,
            "link_curvature_value": self.link_curvature_value,
            "trace_condition": self.trace_condition,
            "normalized": self.normalized,
            "admissible_alpha": list(self.admissible_alpha),
            "verdict": self.verdict,
            "detail": self.detail,
        }


_THETA_SAMPLES = np.linspace(0.02, math.pi - 0.02, 181)


def check_obstructions(g: ConicMetric, tol: float = 1e-8) -> ObstructionReport:
    """Classify a conic metric against the deformation obstructions."""
    m = g.m
    theta = None if g.link.is_constant_curvature else _THETA_SAMPLES
    values = np.atleast_1d(np.asarray(g.boundary_link_curvature(theta), dtype=float))
    if not np.all(np.isfinite(values)):
        return ObstructionReport(False, math.nan, False, False, (),
                                 VERDICT_OBSTRUCTED, "degenerate link curvature data")
    c = float(values.mean())
    spread = float(values.max() - values.min())
    constant = spread <= tol * max(1.0, abs(c))
    trace = g.trace_x_derivative_at_boundary
    trace_ok = abs(trace) <= tol
    target = m * (m - 1)
    normalized = constant and abs(c - target) <= tol * target

    if not constant:
        detail = f"boundary link curvature varies by {spread:.3g} over the link"
        verdict = VERDICT_OBSTRUCTED
        alphas: tuple[float, ...] = ()
    elif c <= 0.0:
        detail = f"boundary link curvature {c:.6g} is not positive"
        verdict = VERDICT_OBSTRUCTED
        alphas = ()
    elif not trace_ok:
        detail = (f"x-derivative trace {trace:.6g} at the tip does not vanish; "
                  "level-set mean curvature is not asymptotically -m/x")
        verdict = VERDICT_OBSTRUCTED
        alphas = tuple(alpha_exponents(c, m).admissible_roots())
    elif normalized:
        detail = f"boundary link curvature equals m(m-1) = {target}"
        verdict = VERDICT_NORMALIZED
        alphas = tuple(alpha_exponents(c, m).admissible_roots())
    else:
        detail = (f"boundary link curvature {c:.6g} is a positive constant; "
                  f"rescaling the link by {c / target:.6g} normalizes it "
                  f"(cone angle {math.sqrt(c / target):.6g})")
        verdict = VERDICT_RESCALE
        alphas = tuple(alpha_exponents(c, m).admissible_roots())

    return ObstructionReport(link_curvature_constant=constant,
                             link_curvature_value=c,
                             trace_condition=trace_ok,
                             normalized=normalized,
                             admissible_alpha=alphas,
                             verdict=verdict,
                             detail=detail)

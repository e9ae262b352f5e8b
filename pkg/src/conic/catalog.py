"""Named example metrics used by tests and the command line.

Each builder returns a warped-product conic metric over the unit round
m-sphere link (optionally rescaled).  Derivatives of the warping are
analytic; finite differences appear only in oracle paths.

Members:

* ``flat-cone``        psi = x; scalar-flat punctured Euclidean space.
* ``rigid-scaled``     psi = k x; rigid cone with curvature m(m-1)(k^-2-1)/x^2.
* ``sec52``            psi = x (2 + x^2); negative curvature with an
                       unbounded tip profile but vanishing trace obstruction.
* ``negcurv``          psi = x exp(x^2/2); bounded, strictly negative
                       curvature with normalized boundary link.
* ``trace-violator``   psi = x + x^2; nonzero boundary x-derivative trace.
* ``hyperbolic``       psi = L sinh(x/L), L = sqrt(m(m+1)); constant S = -1.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .geometry import ConicMetric, LinkMetric, Warping, unit_round_sphere

__all__ = ["CATALOG_NAMES", "build_example", "catalog_descriptions"]


def _flat_warping() -> Warping:
    return Warping("flat-cone", lambda x: x, lambda x: np.ones_like(x),
                   lambda x: np.zeros_like(x), slope0=1.0, curv0=0.0,
                   rigid=True, rigid_radius=math.inf,
                   dpsi_excess=lambda x: np.zeros_like(x))


def _rigid_warping(k: float) -> Warping:
    return Warping("rigid-scaled", lambda x: k * x,
                   lambda x: np.full_like(x, k), lambda x: np.zeros_like(x),
                   slope0=k, curv0=0.0, rigid=True, rigid_radius=math.inf,
                   params=(k,), dpsi_excess=lambda x: np.zeros_like(x))


def _sec52_warping() -> Warping:
    # psi = x u(x) with u = 2 + x^2: u' >= 0, u'' bounded, u >= 2
    return Warping("sec52",
                   lambda x: x * (2.0 + x ** 2),
                   lambda x: 2.0 + 3.0 * x ** 2,
                   lambda x: 6.0 * x,
                   slope0=2.0, curv0=0.0,
                   dpsi_excess=lambda x: 3.0 * x ** 2)


def _negcurv_warping() -> Warping:
    return Warping("negcurv",
                   lambda x: x * np.exp(x ** 2 / 2.0),
                   lambda x: np.exp(x ** 2 / 2.0) * (1.0 + x ** 2),
                   lambda x: np.exp(x ** 2 / 2.0) * x * (3.0 + x ** 2),
                   slope0=1.0, curv0=0.0,
                   dpsi_excess=lambda x: np.expm1(x ** 2 / 2.0)
                   + x ** 2 * np.exp(x ** 2 / 2.0))


def _trace_violator_warping() -> Warping:
    return Warping("trace-violator",
                   lambda x: x + x ** 2,
                   lambda x: 1.0 + 2.0 * x,
                   lambda x: np.full_like(x, 2.0),
                   slope0=1.0, curv0=2.0,
                   dpsi_excess=lambda x: 2.0 * x)


def _hyperbolic_warping(m: int) -> Warping:
    lam = math.sqrt(m * (m + 1))
    return Warping("hyperbolic",
                   lambda x: lam * np.sinh(x / lam),
                   lambda x: np.cosh(x / lam),
                   lambda x: np.sinh(x / lam) / lam,
                   slope0=1.0, curv0=0.0, params=(lam,),
                   dpsi_excess=lambda x: 2.0 * np.sinh(x / (2.0 * lam)) ** 2)


def _axisymmetric_link(m: int, bump: float) -> LinkMetric:
    from .geometry import AXISYMMETRIC_LINK, sphere_curvature, sphere_volume
    base = sphere_curvature(m)

    def profile(theta: np.ndarray) -> np.ndarray:
        return base * (1.0 + bump * np.cos(theta))

    return LinkMetric(dim_m=m, kind=AXISYMMETRIC_LINK, curvature=profile,
                      volume=sphere_volume(m))


CATALOG_NAMES = ("flat-cone", "rigid-scaled", "sec52", "negcurv",
                 "trace-violator", "hyperbolic")


def build_example(name: str, m: int = 2, x_max: float = 1.0, k: float = 2.0,
                  link_curvature: float | None = None,
                  link_kind: str = "constant",
                  link_bump: float = 0.0) -> ConicMetric:
    """Build a catalog metric; parameters beyond the builder's are ignored."""
    builders: dict[str, Callable[[], Warping]] = {
        "flat-cone": _flat_warping,
        "rigid-scaled": lambda: _rigid_warping(k),
        "sec52": _sec52_warping,
        "negcurv": _negcurv_warping,
        "trace-violator": _trace_violator_warping,
        "hyperbolic": lambda: _hyperbolic_warping(m),
    }
    if name not in builders:
        raise KeyError(f"unknown example {name!r}; choices: {', '.join(CATALOG_NAMES)}")
    if link_kind == "axisymmetric":
        link = _axisymmetric_link(m, link_bump)
    elif link_curvature is None:
        link = unit_round_sphere(m)
    else:
        link = LinkMetric(dim_m=m, curvature=float(link_curvature))
    return ConicMetric(link=link, warping=builders[name](), x_max=x_max)


def catalog_descriptions() -> list[tuple[str, str]]:
    return [
        ("flat-cone", "psi = x over the unit round sphere; scalar-flat"),
        ("rigid-scaled", "psi = k x; rigid cone, curvature m(m-1)(1/k^2-1)/x^2"),
        ("sec52", "psi = x(2 + x^2); negative curvature, off-normalized link"),
        ("negcurv", "psi = x exp(x^2/2); bounded negative curvature, normalized"),
        ("trace-violator", "psi = x + x^2; boundary trace obstruction fails"),
        ("hyperbolic", "psi = L sinh(x/L), L = sqrt(m(m+1)); constant S = -1"),
    ]

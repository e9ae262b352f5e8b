"""Numerical toolkit for incomplete conic metrics: curvature invariants,
deformation obstructions, certified barriers, and a constructive solver for
the constant-negative-curvature conformal equation."""

from .barriers import (BarrierConstants, BarrierPair, build_barrier_pair,
                       build_subsolution, build_supersolution, choose_constants,
                       verify_barrier)
from .catalog import CATALOG_NAMES, build_example
from .config import JobConfig, parse_config, serialize_config
from .conformal import (ConformalFactor, YamabeContext, conformal_scalar_curvature,
                        conic_preservation, laplacian_coefficients,
                        rescaled_boundary_metric, yamabe_context, yamabe_residual)
from .errors import (ConfigError, ConicError, ConstructionError, ConvergenceError,
                     GridError, HypothesisError)
from .functionals import (ConformalFamily, conic_yamabe_estimate, conformal_volume,
                          einstein_hilbert)
from .geometry import (ConicMetric, CurvatureProfile, LinkMetric, Warping,
                       is_boundary_bounded, mean_curvature_trace,
                       scalar_curvature_fd, scalar_curvature_warped,
                       scalar_curvature_warped_profile, singular_part,
                       sphere_volume, volume_element)
from .grid import RadialGrid
from .obstructions import (AlphaConsistency, AlphaExponents, ObstructionReport,
                           alpha_consistency, alpha_exponents, check_obstructions)
from .solver import (SolverOptions, SolveReport, assemble_L, fit_boundary_expansion,
                     monotone_iterate, shift_constant)

__version__ = "0.1.0"

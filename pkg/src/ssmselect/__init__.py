"""Curvature-based master-mode selection for nonlinear structural ROMs.

The package builds reduced-order models of forced mechanical systems
by projecting onto a master set of linear normal modes.  The master
set is chosen automatically: slave modes whose invariant-manifold
graph bends the most (largest directional scalar curvature at the
origin) are promoted into the projection basis.  Harmonic-balance
continuation then validates the resulting ROMs against the full model.
"""

from .curvature import (
    CurvatureReport,
    curvature_oracle,
    curvature_report,
    directional_curvature,
    total_curvature,
)
from .modal import (
    MasterSplit,
    ModalModel,
    NonProportionalDampingError,
    NonresonanceReport,
    SpectralQuotientError,
    check_nonresonance,
    compute_modes,
    modal_damping,
    modal_quadratic_slice,
    spectral_quotient,
)
from .models import (
    BeamParams,
    build_beam_model,
    build_curved_beam,
    build_straight_beam,
    build_three_mass,
    builtin_model,
)
from .response import (
    PeriodicSolution,
    ReducedModel,
    ResponseCurve,
    amplitude_sweep,
    frequency_sweep,
    lift,
    linear_response,
    mass_norm,
    reduce_model,
    relative_error,
    solve_periodic_hb,
)
from .selection import (
    SelectionConfig,
    SelectionReport,
    initial_master_set,
    recommend_modes,
    recommend_with_curvatures,
    run_selection,
)
from .ssm import (
    MasterOperator,
    ResonanceError,
    SSMCoefficients,
    build_bk,
    build_master_operator,
    build_rk,
    compute_ssm_coefficients,
    evaluate_ssm,
    invariance_residual,
    solve_wk,
)
from .system import (
    ForcingSpec,
    PolyTensor2,
    PolyTensor3,
    SecondOrderSystem,
    evaluate_jacobian,
    evaluate_nonlinearity,
    read_model_file,
    validate_system,
    write_model_file,
)

__version__ = "0.1.0"

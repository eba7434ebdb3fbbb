"""Local weighted means of Dirichlet-series coefficients, their Voronoi-type
dual series, and short-interval sign-change detection."""

__version__ = "0.1.0"

from .errors import (
    DataError,
    FitError,
    InsufficientDataError,
    LocalVoronoiError,
    NumericError,
    OscillationTooFastError,
    SingularityError,
    SpecError,
    ThresholdError,
    TruncationError,
)
from .feq import (
    DerivedConstants,
    FunctionalEquationSpec,
    GammaFactor,
    PoleSpec,
    derive_constants,
    sign_scalar,
    validate_spec,
)
from .gamma_ratio import ExpansionCoefficients, expansion_coeffs, f_term, gamma_ratio, ratio_residual
from .oscillation import (
    DetectionParams,
    KernelParams,
    SignChangeReport,
    detect_extrema,
    gap_scan,
    kernel,
    kernel_average,
    kernel_transform,
    minimal_window_constant,
    sign_changes,
    window_scan,
)
from .providers import (
    CoefficientStream,
    builtin_instance,
    delta_stream,
    export_stream,
    ingest_stream,
    tau_series,
    zeta_squared_stream,
    zeta_stream,
)
from .voronoi import (
    TruncationPolicy,
    VoronoiEvaluation,
    direct_local_sum,
    i_kernel,
    leading_term,
    main_term_contour,
    main_term_residues,
    oscillatory_integral,
    voronoi_series,
)
from .weight import WeightProfile, bump, derivative_sup, mellin, mellin_derivative, weight, weight_integral

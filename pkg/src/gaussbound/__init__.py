"""Gaussianity-bounded uncertainty relation for single-mode states.

The degree of Gaussianity ``g = Tr(rho rho_G) / Tr(rho_G^2)`` compares a state
with the Gaussian state of equal first and second moments. For each ``g`` the
uncertainty ``alpha = 2 sqrt(det gamma)`` is bounded from below by
``alpha_min(g)``; this package computes that bound, the states reaching it,
and independent checks of both.
"""

from .errors import (
    ConsistencyError,
    DegenerateMomentsError,
    DimensionMismatchError,
    GaussboundError,
    InvalidDimensionError,
    ParameterRangeError,
    StateSpecError,
    TruncationError,
    TruncationWarning,
)
from .extremal import alpha_min, extremal_curve, min_branch_point, max_branch_point, rho_max, rho_min
from .fock import (
    DensityOperator,
    coherent,
    from_spec,
    load_state,
    mixture,
    number_state,
    save_state,
    squeezed_vacuum,
    thermal,
    validate,
)
from .gaussian import moments, reference_gaussian
from .gaussianity import gaussianity, phase_average, positivity_window, wigner

__version__ = "0.1.0"

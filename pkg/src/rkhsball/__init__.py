"""Norm-constrained least squares over kernel spaces with adaptive selection
of the constraint radius (fixed kernel) and of width plus radius (Gaussian
family), together with closed-form risk-bound calculators and a seeded Monte
Carlo harness for verifying the underlying high-probability events.
"""

from .data import Dataset
from .errors import ConstraintError, InputError, NumericalError, RkhsBallError
from .estimator import (
    ConstrainedFit,
    GramEigen,
    clip,
    eigen_gram,
    empirical_sq_distance,
    fit_constrained,
    mu_of_r,
    predict,
    rkhs_sq_distance,
)
from .kernels import (
    GaussianKernel,
    PrecomputedKernel,
    WidthGrid,
    chaining_constant_bound,
    covering_number_bound,
    entropy_integral_bound,
    family_sup_distance_bound,
    gaussian_eval,
    gram,
    width_grid,
)
from .selection_fixed import (
    GLConfig,
    RadiusGrid,
    SelectionResult,
    gl_criterion,
    radius_grid,
    select_radius,
    t_of_tau,
    tau_min_fixed,
)
from .selection_gauss import (
    GaussGLConfig,
    GaussSelectionResult,
    gauss_gl_criterion,
    select_width_radius,
    t_of_tau_gauss,
    tau_min_gauss,
)
from . import experiments, theory

__version__ = "0.1.0"

"""Simulation and verification toolkit for Brownian motion on U(n-k,k),
the hyperbolic complex Grassmannian, and its path functionals."""

from hgbm.group import (
    AlgebraElement,
    BlockGroupElement,
    GroupShape,
    build_basis,
    pseudo_unitarity_defect,
    reproject,
    sample_increment,
    step_group,
)
from hgbm.grassmann import (
    GrassmannPoint,
    ScalarField,
    apply_generator,
    carre_du_champ,
    contraction_identity_defects,
    invariant_density,
    project_to_grassmann,
    step_grassmann,
)
from hgbm.spectral import (
    SpectralState,
    chart_convert,
    collision_diagnostics,
    doob_constant,
    km_transition_density,
    step_lambda,
    step_zeta,
    vandermonde,
)
from hgbm.functionals import (
    FiberConfig,
    FunctionalAccumulators,
    accumulate_trace,
    area_increment,
    girsanov_martingale,
    horizontal_lift,
    solve_fiber,
    winding_angle,
)
from hgbm.special import gauss_2f1, gamma_weight
from hgbm.kernels import (
    KernelParams,
    QuadratureConfig,
    hyperbolic_heat_kernel,
    jacobi_function,
    jacobi_heat_kernel,
    maass_kernel,
)
from hgbm.laplace import (
    intertwining_defect,
    km_laplace_transform,
    laplace_series_coeff,
    rank_one_laplace,
)
from hgbm.montecarlo import RunConfig, run_paths

__all__ = [name for name in dir() if not name.startswith("_")]

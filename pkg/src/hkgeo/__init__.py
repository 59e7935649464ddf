"""Hellinger-Kantorovich geometry on discrete nonnegative measures.

Entropy-transport solvers with duality certificates, mollified Legendre
potentials, cylinder-function calculus, samplers and validators for the
multiplicative infinite-dimensional Lebesgue measure, and squared-Bessel
radial dynamics.
"""

from .measures import (
    DiscreteMeasure,
    MassDecomposition,
    decompose,
    dilate,
    hellinger_sq,
    load_measure,
    measure_from_csv,
    measure_from_json,
    measure_to_csv,
    measure_to_json,
    pushforward,
    recompose,
    save_measure,
    total_mass,
    wasserstein_sq,
)
from .cone import ConePoint, cone_dist, g_transform, let_cost
from .let import (
    ConePlan,
    LetProblem,
    LetSolution,
    ghk_sq,
    hk_sq,
    let_problem,
    lift_to_cone,
    limit_diagnostics,
    solve_let,
    solve_let_exact_small,
    verify_optimality,
)
from .mollify import MollifierConfig, mollify, weak_error
from .potentials import (
    PotentialPair,
    gradient_duality_value,
    grid_measure_on_ball,
    legendre_pair,
)
from .cylinders import (
    CylinderFunction,
    OuterFunction,
    ScalarField,
    evaluate,
    gradient,
    linear_lip_bound,
    parse_cylinder,
    perturbation_derivative,
    slope_probe,
    tangent_norm_14,
    truncation,
)
from .randmeas import (
    CheckReport,
    IntensityParams,
    SampleBatch,
    estimate_intensity,
    invariance_checks,
    mecke_check_df,
    mecke_check_mlp,
    sample_df,
    sample_gamma_measure,
    sample_lambda_window,
    sample_mlp,
)
from .bessel import (
    BesselPath,
    dirichlet_form_mc,
    generator_symmetry,
    hitting_prob,
    hyp0f1,
    quadrature_E,
    radial_form_mc,
    simulate_besq,
)

__version__ = "0.1.0"

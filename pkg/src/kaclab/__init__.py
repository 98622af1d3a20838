"""Kac-model heat reservoirs: exact jump simulation, moment calculus,
Fourier d2 metrics, functional-inequality checks, and steady-state
rotational averages."""

from .d2 import (
    CharFunGrid,
    D2Estimate,
    EmpiricalCF,
    analytic_cf,
    d2_estimate,
    empirical_cf,
    gaussian_cf,
    gaussian_grid_cf,
    marginal,
    paired_cf_difference,
    zero_cf,
)
from .inequalities import (
    Envelope,
    TestFunction,
    VerificationReport,
    check_alpha_bound,
    check_d1_lower_bound,
    check_sqrtn_bound,
    check_third_power_bound,
    d1,
    dN,
    library,
)
from .jump import (
    CHANNELS,
    GeneratorSpec,
    TrajectoryRecord,
    VelocityBlock,
    evolve,
    maxwellian_sampler,
    run_coupled_ensemble,
    run_ensemble,
    step,
    total_rate,
    two_temperature_sampler,
)
from .kinetics import collide, sample_maxwellian, sample_unit_sphere, thermostat_collide
from .moments import (
    GeneratorClosureError,
    GeneratorMatrix,
    apply_generator,
    build_matrix,
    e4_from_pure_fourth,
    e4_observable,
    energy_polynomial,
    moment_trajectory,
    monomial_closure,
    newton_cooling,
    sphere_average_pair,
    sphere_moment,
)
from .polynomials import Polynomial
from .rng import RandomSource
from .rotations import (
    MomentumFixingRotation,
    momentum_complement_basis,
    rot_average_samples,
    sample_fixed_momentum_rotation,
    verify_rota_bound,
)

__all__ = [
    "CHANNELS",
    "CharFunGrid",
    "D2Estimate",
    "EmpiricalCF",
    "Envelope",
    "GeneratorClosureError",
    "GeneratorMatrix",
    "GeneratorSpec",
    "MomentumFixingRotation",
    "Polynomial",
    "RandomSource",
    "TestFunction",
    "TrajectoryRecord",
    "VelocityBlock",
    "VerificationReport",
    "analytic_cf",
    "apply_generator",
    "build_matrix",
    "check_alpha_bound",
    "check_d1_lower_bound",
    "check_sqrtn_bound",
    "check_third_power_bound",
    "collide",
    "d1",
    "d2_estimate",
    "dN",
    "e4_from_pure_fourth",
    "e4_observable",
    "empirical_cf",
    "energy_polynomial",
    "evolve",
    "gaussian_cf",
    "gaussian_grid_cf",
    "library",
    "marginal",
    "maxwellian_sampler",
    "moment_trajectory",
    "momentum_complement_basis",
    "monomial_closure",
    "newton_cooling",
    "paired_cf_difference",
    "rot_average_samples",
    "run_coupled_ensemble",
    "run_ensemble",
    "sample_fixed_momentum_rotation",
    "sample_maxwellian",
    "sample_unit_sphere",
    "sphere_average_pair",
    "sphere_moment",
    "step",
    "thermostat_collide",
    "total_rate",
    "two_temperature_sampler",
    "verify_rota_bound",
    "zero_cf",
]

__version__ = "0.1.0"

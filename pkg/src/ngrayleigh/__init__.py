"""Nonlinear generalized Rayleigh quotients for a two-parameter semilinear
Dirichlet problem: fiber analysis, extremal values and positive branches."""

from .discretization import (
    DiscreteField, GridSpec, energy, energy_gradient, gradient_energy, lp_mass, norm_tuple,
    pde_residual, quotient_gradient, sine_bump,
)
from .errors import (
    BandViolation, BracketError, DomainError, NGRayleighError, UnsupportedRegimeError,
    ValidationError,
)
from .extremal import ExtremalCurve, ExtremalResult, extremal_curve, minimize_lambda_star, minimize_mu
from .fibering import (
    CriticalPair, Exponents, FiberAnalysis, MuQuotients, NormTuple, RootTriple, analyze_fiber,
    critical_pair, inflection_root, lambda_star_of_u, mu_quotients, nehari_roots, t_star,
)
from .solver import SolveReport, classify_solution, coercivity_probe, solve_branch1, solve_branch2

__version__ = "0.1.0"

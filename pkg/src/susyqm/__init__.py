"""SUSY quantum mechanics on the line.

Partner potentials from polynomial superpotentials, a finite-difference
Schrodinger solver (H = -d^2/dx^2 + V, mass 1/2), coupling-constant
transition classification, and exact Bohr-Sommerfeld WKB corrections.
"""

from .potentials import PolyTerm, Potential
from .superpotential import (
    Superpotential,
    SusyClass,
    classify_susy,
    derivative,
    duality_holds,
    partner_potentials,
    zero_mode_exponent,
)
from .solver import (
    ConvergenceError,
    EigenState,
    Grid,
    NonConfiningError,
    SolveRequest,
    Spectrum,
    TridiagonalOperator,
    auto_box,
    build_hamiltonian,
    eigenstate,
    expectation,
    lowest_eigenvalues,
    pt_coefficients,
    solve,
    solve_potential,
)
from .sweeps import (
    HARMONIC,
    QUARTIC,
    SEXTIC,
    DegeneracyReport,
    DerivativeEstimate,
    FamilySpec,
    FitError,
    FitResult,
    Sector,
    SweepResult,
    SweepSample,
    TransitionClass,
    TransitionKind,
    UnresolvedClassificationError,
    ZeroLimits,
    check_degeneracy,
    classify,
    family_by_name,
    fit_instanton,
    fit_power_law,
    limits_at_zero,
    sweep,
)
from .wkb import (
    ActionResult,
    GammaEntry,
    GammaTable,
    InvarianceReport,
    QuadratureError,
    SusyGammaPair,
    TurningPoints,
    action_integral,
    coupling_invariance,
    gamma_table,
    susy_gamma_pair,
    turning_points,
    wkb_gamma,
)
from .expressions import (
    ExpressionAst,
    ExprTerm,
    ParseError,
    expression_to_text,
    parse_expression,
    parse_potential,
    parse_superpotential,
)

__version__ = "0.1.0"

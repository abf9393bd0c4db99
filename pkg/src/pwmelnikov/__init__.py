"""First-order Melnikov functions for piecewise-smooth perturbations of two planar systems.

LV is the reduced Lotka-Volterra system with integrating factor x^-4, BT the
Bogdanov-Takens Hamiltonian y^2/2 + x - x^3/3.
"""

from .errors import (AccuracyError, DegenerateOvalError, DomainError, EnergyRangeError, InvariantViolation,
                     MelnikovError, PreconditionError, RatioDenominatorError, SimulationError, SingularLocusError,
                     UnsupportedIndexError)
from .picard_fuchs import (Annihilator, PFSystem, annihilator_residual, construct_annihilator, pf_residual,
                           pf_system, residual_polynomials, riccati_residual, second_order_residual)
from .polynomials import PolyMatrix, RationalPoly
from .quadrature import abelian_derivative, abelian_integral, lower_abelian_integral, melnikov_direct
from .reduction import (BASIS, BasisDecomposition, MelnikovRepresentation, evaluate_representation,
                        melnikov_representation, reduce_monomial)
from .simulator import (LimitCycleFinding, ReturnMapSample, Trajectory, find_limit_cycles, integrate_piecewise,
                        poincare_return)
from .systems import BT, LV, OvalEndpoints, Perturbation, PlanarState, Side, SystemId, hamiltonian, oval_endpoints
from .zeros import ZeroBracket, ZeroReport, bt_second_derivative_zero, isolate_zeros, theoretical_bound

__all__ = [
    "AccuracyError", "Annihilator", "BASIS", "BT", "BasisDecomposition", "DegenerateOvalError", "DomainError",
    "EnergyRangeError", "InvariantViolation", "LV", "LimitCycleFinding", "MelnikovError", "MelnikovRepresentation",
    "OvalEndpoints", "PFSystem", "Perturbation", "PlanarState", "PolyMatrix", "PreconditionError", "RationalPoly",
    "RatioDenominatorError", "ReturnMapSample", "Side", "SimulationError", "SingularLocusError", "SystemId",
    "Trajectory", "UnsupportedIndexError", "ZeroBracket", "ZeroReport", "abelian_derivative", "abelian_integral",
    "annihilator_residual", "bt_second_derivative_zero", "construct_annihilator", "evaluate_representation",
    "find_limit_cycles", "hamiltonian", "integrate_piecewise", "isolate_zeros", "lower_abelian_integral",
    "melnikov_direct", "melnikov_representation", "oval_endpoints", "pf_residual", "pf_system", "poincare_return",
    "reduce_monomial", "residual_polynomials", "riccati_residual", "second_order_residual", "theoretical_bound",
]

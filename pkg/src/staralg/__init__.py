"""Ordered *-algebras in finite dimension: cones, states, GNS data, characters
and moment sequences."""
from .algebra import StarAlgebra, four_a_identity_residual, is_symmetric_algebra, try_invert
from .characters import (CharacterReport, compare_pure_vs_characters, enumerate_characters,
                         is_multiplicative, largest_multiplicative_subalgebra,
                         variance_square_criterion)
from .cone import (BlockPSD, DominantSet, FunctionalGenerated, check_coercive_product,
                   coercivity_margin, is_positive, order_leq, qdown_member, regularity_check,
                   validate_cone_axioms)
from .errors import (AlgebraValidationError, CapabilityError, InputError,
                     InternalConsistencyError, NotInvertible, SchemaError, StarAlgebraError)
from .functionals import (State, Unsupported, bimodule_act, cauchy_schwarz_check,
                          enumerate_pure_states, functional_leq, functional_star, is_pure,
                          monoid_act, variance)
from .gns import (GnsData, build_gns, gns_positivity_check, limit_formula_check,
                  moment_sequence_of, op_norm_inf)
from .moments import (GrowthTag, JacobiData, MomentSequence, carleman_classify, growth_check,
                      jacobi_from_moments, recursion_solution, stieltjes_state_check)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Model RB random CSPs: generation, exact solving, satisfiability flips,
moment calculations, parameter checks, SAT encoding and experiments."""
from .core import (
    Constraint,
    Instance,
    RBParams,
    SymmetricRelation,
    Variant,
    derive_params,
    generate_original,
    generate_symmetric,
    generate_symmetric_relation,
    instantiate_symmetric,
)
from .errors import (
    BudgetExceeded,
    DomainError,
    FlipPreconditionViolated,
    InstanceFormatError,
    InvalidModel,
    NoFlipPairFound,
    ParseError,
    RBLabError,
    SizeError,
    UnsupportedArity,
)
from .flip import FlipCertificate, flip_sat_to_unsat, flip_unsat_to_sat, swap_tuples, verify_certificate
from .solver import Mode, SolveResult, count_solutions, enumerate_oracle, find_near_miss, solve

__version__ = "0.1.0"

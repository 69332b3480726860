"""Finite crossed-product models ``A x| Gamma_q(G, K)``."""
from .gap import GapReport, gap_bytes, gap_operator, right_multiplication_defect, spectral_gap
from .groups import (
    FiniteGroup,
    GroupAction,
    GroupError,
    builtin_group,
    commutator_subgroup,
    cyclic,
    dihedral4,
    klein,
    load_group,
    make_action,
    natural_action,
    regular_action,
    symmetric3,
    trivial_action,
)
from .model import (
    CrossedProductModel,
    ModelSpec,
    doubled_model,
    factorized_semigroup,
    guard_bytes,
    guard_coordinates,
    model_coordinates,
    polar_covariance,
    real_basis,
)
from .relations import (
    RelationError,
    c0_element,
    centrality_defect,
    commutator_extraction,
    covariance_defect,
    free_moment_nc,
    noncrossing_by_erasure,
    word_operator,
    word_vector,
)

from src.pairs.audit import (
    ConditionalAudit,
    EpsilonConsistency,
    audit_pair,
    epsilon_consistency,
    exchangeability_gap,
    trace_product_claim,
)
from src.pairs.base import PairModel
from src.pairs.families import ProjectionFamily, random_family, single_entry_family
from src.pairs.laws import IID_LAWS, SPHERICAL_LAWS, iid_law, spherical_law
from src.pairs.models import (
    make_iid_sum_pair,
    make_orthogonal_projection_pair,
    make_raw_pair,
    make_spherical_pair,
    make_unitary_projection_pair,
    realify_gamma_lambda,
)

from src.bounds.reports import BoundInput, BoundReport
from src.bounds.theorems import (
    THEOREMS,
    basic_proof_inputs,
    bound_basic,
    bound_complex,
    bound_cont,
    bound_cont_complex,
    bound_discrete,
    bound_from_audit,
    bound_ksphere,
    bound_mix,
    bound_uthm,
    ind_proof_f_bound,
    ksphere_proof_f_bound,
    uthm_proof_constant,
    uthm_proof_norms,
)

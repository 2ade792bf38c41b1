from src.stein.checks import (
    DerivativeAudit,
    HessianNormAudit,
    KinkGrowth,
    characterizing_check,
    derivative_bound_audit,
    hessian_lipschitz_ratio,
    hessian_norm_audit,
    kink_growth,
)
from src.stein.functions import (
    TEST_FUNCTIONS,
    CallableFunction,
    estimate_lipschitz_constants,
    make_test_function,
    spot_check_points,
)
from src.stein.solution import SteinSolution, stein_evaluate, stein_residual

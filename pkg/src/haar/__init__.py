from src.haar.moments import (
    MomentPolynomial,
    MomentQuery,
    exact_moment,
    expected_contraction,
    expected_trace_quartic,
    orthogonal_moment_oracle,
    parse_moment_query,
    q_covariance,
    twisted_covariance,
    unitary_moment_oracle,
)
from src.haar.montecarlo import MomentEstimate, default_moment_battery, mc_moment_estimate, run_moment_checks
from src.haar.rotation import ConjugatedRotation, RotationPerturbation, conjugated_rotation_pair
from src.haar.sampling import (
    sample_frame,
    sample_haar_batch,
    sample_orthogonal,
    sample_orthogonal_batch,
    sample_unitary,
    sample_unitary_batch,
)

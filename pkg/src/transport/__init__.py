from src.transport.clouds import (
    SampleCloud,
    cloud_from_sampler,
    gaussian_cloud,
    gaussian_sampler,
    model_cloud,
    model_sampler,
    target_sampler,
)
from src.transport.wasserstein import (
    CSV_HEADER,
    ComparisonRow,
    compare_to_bound,
    self_distance,
    w1_exact,
    w1_sliced_lb,
)

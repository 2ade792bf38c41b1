import numpy as np


def within_se(estimate, target, se, k=4.0):
    """|estimate - target| <= k standard errors."""
    return abs(estimate - target) <= k * se + 1e-12


def mean_se(values):
    values = np.asarray(values)
    return values.mean(), values.std(ddof=1) / np.sqrt(values.shape[0])

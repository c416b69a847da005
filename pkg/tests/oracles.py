"""Independent reference computations used only by the tests."""

import numpy as np


def normal_equations_fit(a, x, y):
    """Brute-force least squares: solve (D'D) b = D'y for D = [1, a, x, a*x]."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    design = np.column_stack([np.ones_like(x), a, x, a * x])
    return np.linalg.solve(design.T @ design, design.T @ y)


def rss(coef, a, x, y):
    fitted = coef[0] + coef[1] * a + coef[2] * x + coef[3] * a * x
    return float(np.sum((y - fitted) ** 2))


def potential_outcome(model, a, x, z):
    """Noise-free outcome of the linear-interaction model at treatment ``a``."""
    return (model.beta0 + model.beta1 * a + model.beta2 * x + model.beta3 * z
            + model.beta4 * a * x + model.beta5 * a * z)


def covariance_with_se(u, v):
    """Sample covariance and its Monte Carlo standard error."""
    du = u - u.mean()
    dv = v - v.mean()
    prod = du * dv
    return prod.mean(), prod.std() / np.sqrt(u.size)

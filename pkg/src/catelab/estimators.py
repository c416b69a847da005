"""Least-squares CATE estimation and the naive difference in means."""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import EstimationError, SingularFitError, UnsupportedModelError

DESIGN_COLUMNS = ("intercept", "a", "x", "a*x")
# |R_jj| below this fraction of the raw column norm counts as linear dependence.
RANK_TOLERANCE = 1e-9
MIN_UNITS = 5


@dataclass(frozen=True)
class FitResult:
    """Working-model fit ``E[Y | A, X] = b0 + b1*A + b2*X + b3*A*X``.

    Attributes
    ----------
    coefficients : tuple of float
        ``(b0, b1, b2, b3)`` in design-column order.
    residual_variance : float
        Residual sum of squares divided by ``n_used - 4``.
    n_used : int
        Number of units in the fit.
    rss : float
        Residual sum of squares.
    """

    coefficients: tuple
    residual_variance: float
    n_used: int
    rss: float = float("nan")

    @property
    def treatment(self):
        return self.coefficients[1]

    @property
    def interaction(self):
        return self.coefficients[3]


def _arms(dataset):
    a = np.asarray(dataset.a)
    n_treated = int(np.count_nonzero(a == 1))
    return a, n_treated, a.shape[0] - n_treated


def fit_working_model(dataset):
    """Fit ``y ~ 1 + a + x + a*x`` by Householder QR.

    Raises
    ------
    EstimationError
        Fewer than five units or an empty treatment arm.
    SingularFitError
        The design is rank deficient; the error names the first dependent
        column.
    """
    a, n_treated, n_control = _arms(dataset)
    n = a.shape[0]
    if n < MIN_UNITS:
        raise EstimationError(f"need at least {MIN_UNITS} units, got {n}")
    if n_treated == 0 or n_control == 0:
        raise SingularFitError("a", f"treatment arm is empty (treated={n_treated}, control={n_control})")
    x = np.ascontiguousarray(dataset.x, dtype=np.float64)
    y = np.ascontiguousarray(dataset.y, dtype=np.float64)
    af = np.ascontiguousarray(a, dtype=np.float64)
    coef, rss, rdiag, colnorm = kernels.fit_interaction(af, x, y)
    for name, r, norm in zip(DESIGN_COLUMNS, rdiag, colnorm):
        if not abs(r) > RANK_TOLERANCE * norm:
            raise SingularFitError(name)
    return FitResult(tuple(float(c) for c in coef), float(rss) / (n - 4), n, float(rss))


def predict_cate(fit, x):
    """Estimated CATE ``b1 + b3 * x``; vectorized over ``x``."""
    return fit.coefficients[1] + fit.coefficients[3] * x


def naive_difference_in_means(dataset):
    """``mean(y | a=1) - mean(y | a=0)``."""
    a, n_treated, n_control = _arms(dataset)
    if n_treated == 0 or n_control == 0:
        raise EstimationError(f"both arms must be nonempty (treated={n_treated}, control={n_control})")
    y = np.asarray(dataset.y)
    treated = a == 1
    return float(y[treated].mean() - y[~treated].mean())


@dataclass(frozen=True)
class BiasDecomposition:
    """Split of the naive contrast for the constant-effect linear model.

    ``naive_contrast`` equals the sum of the other four terms. The
    imbalance terms use empirical group means; ``residual_term`` is the
    difference in mean outcome noise between the arms.
    """

    naive_contrast: float
    structural_effect: float
    x_imbalance_term: float
    z_imbalance_term: float
    residual_term: float

    @property
    def bias(self):
        return self.naive_contrast - self.structural_effect

    def total(self):
        return self.structural_effect + self.x_imbalance_term + self.z_imbalance_term + self.residual_term


def decompose_naive_bias(dataset, model):
    """Decompose the naive contrast into effect, covariate imbalance and noise.

    Only defined for models without treatment interactions
    (``beta4 == beta5 == 0``).
    """
    if model.has_interactions:
        raise UnsupportedModelError(
            "bias decomposition requires beta4 == beta5 == 0, "
            f"got beta4={model.beta4}, beta5={model.beta5}")
    naive = naive_difference_in_means(dataset)
    treated = np.asarray(dataset.a) == 1
    x = np.asarray(dataset.x)
    z = np.asarray(dataset.z)
    noise = np.asarray(dataset.y0) - (model.beta0 + model.beta2 * x + model.beta3 * z)

    def gap(v):
        return v[treated].mean() - v[~treated].mean()

    return BiasDecomposition(
        naive_contrast=naive,
        structural_effect=model.beta1,
        x_imbalance_term=float(model.beta2 * gap(x)),
        z_imbalance_term=float(model.beta3 * gap(z)),
        residual_term=float(gap(noise)),
    )

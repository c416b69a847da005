"""How far conditional average effects are from individual effects.

Closed forms hold for the linear-interaction model with a bivariate normal
covariate pair. The empirical side works on any paired sample.
"""

from dataclasses import dataclass
from typing import Optional

import math

import numpy as np

from ._backend import kernels
from .dgp import cate_coefficients
from .errors import EstimationError, UndefinedCorrelationError


def cate_variance(model, params):
    """``Var(tau(X)) = sigma_x**2 * slope**2`` with ``slope`` the CATE slope in x."""
    _, slope = cate_coefficients(model, params)
    return params.sigma_x**2 * slope**2


def ite_variance(model, params):
    """``Var(tau_i) = b4^2 sx^2 + b5^2 sz^2 + 2 b4 b5 rho sx sz``."""
    b4, b5 = model.beta4, model.beta5
    sx, sz = params.sigma_x, params.sigma_z
    return b4**2 * sx**2 + b5**2 * sz**2 + 2.0 * b4 * b5 * params.rho * sx * sz


def cate_ite_covariance(model, params):
    """``Cov(tau(X), tau_i)``, which equals ``Var(tau(X))`` and is never negative."""
    b4, b5 = model.beta4, model.beta5
    sx, sz, rho = params.sigma_x, params.sigma_z, params.rho
    _, slope = cate_coefficients(model, params)
    # Both cross terms of the expansion, kept separate so the identity with
    # cate_variance is checked rather than assumed.
    expanded = b4 * slope * sx**2 + b5 * slope * rho * sx * sz
    # A near-zero slope can round the product a few ulps below zero.
    return max(expanded, 0.0)


def cate_ite_correlation(model, params):
    """``Corr(tau(X), tau_i) = |sx * slope| / sd(tau_i)``, always in ``[0, 1]``.

    Exactly zero when the CATE slope ``b4 + b5*rho*sz/sx`` is zero.

    Raises
    ------
    UndefinedCorrelationError
        When ``Var(tau_i)`` is zero.
    """
    var_ite = ite_variance(model, params)
    if not var_ite > 0:
        raise UndefinedCorrelationError("individual effects have zero variance; correlation is undefined")
    _, slope = cate_coefficients(model, params)
    value = abs(params.sigma_x * slope) / math.sqrt(var_ite)
    # Rounding can push a perfect correlation a few ulps past 1.
    return min(value, 1.0)


@dataclass(frozen=True)
class EmpiricalDiscordance:
    """Pearson correlation and sign disagreement of paired (CATE, ITE) values.

    ``correlation`` is ``None`` and ``degenerate`` is set when either
    coordinate has zero variance.
    """

    correlation: Optional[float]
    sign_disagreement_rate: float
    n_pairs: int
    degenerate: bool
    covariance: float
    cate_variance: float
    ite_variance: float


def empirical_discordance(cate, ite):
    """Compare paired CATE and ITE values.

    A pair disagrees when its two values have strictly opposite signs; zero
    disagrees with nothing. Moments use the ``n`` denominator.
    """
    c = np.ascontiguousarray(cate, dtype=np.float64)
    t = np.ascontiguousarray(ite, dtype=np.float64)
    if c.shape != t.shape or c.ndim != 1:
        raise EstimationError("cate and ite must be 1-d sequences of equal length")
    if c.size < 2:
        raise EstimationError(f"need at least 2 pairs, got {c.size}")
    _, _, var_c, var_t, cov, opposite = kernels.discordance_stats(c, t)
    degenerate = not (var_c > 0 and var_t > 0)
    corr = None
    if not degenerate:
        corr = float(np.clip(cov / math.sqrt(var_c * var_t), -1.0, 1.0))
    return EmpiricalDiscordance(corr, opposite / c.size, int(c.size), degenerate, cov, var_c, var_t)


def cate_mse(estimated, truth):
    """Mean squared difference between estimated and true CATE values."""
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise EstimationError(f"length mismatch: {est.shape} vs {tru.shape}")
    if est.size < 1:
        raise EstimationError("need at least one value")
    d = est - tru
    return float(d @ d / d.size) if d.ndim == 1 else float(np.mean(d**2))


@dataclass(frozen=True)
class DiscordanceReport:
    closed_form_covariance: Optional[float]
    closed_form_correlation: Optional[float]
    empirical_correlation: Optional[float]
    sign_disagreement_rate: float
    cate_mse: float

    def to_dict(self):
        return {
            "closed_form_covariance": self.closed_form_covariance,
            "closed_form_correlation": self.closed_form_correlation,
            "empirical_correlation": self.empirical_correlation,
            "sign_disagreement_rate": self.sign_disagreement_rate,
            "cate_mse": self.cate_mse,
        }


def discordance_report(model, params, cate_hat, ite, mse):
    """Bundle closed-form population values with empirical sample values."""
    try:
        corr = cate_ite_correlation(model, params)
    except UndefinedCorrelationError:
        corr = None
    emp = empirical_discordance(cate_hat, ite)
    return DiscordanceReport(
        closed_form_covariance=cate_ite_covariance(model, params),
        closed_form_correlation=corr,
        empirical_correlation=emp.correlation,
        sign_disagreement_rate=emp.sign_disagreement_rate,
        cate_mse=float(mse),
    )

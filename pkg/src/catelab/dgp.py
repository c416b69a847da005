"""Data-generating processes and their analytic treatment-effect oracles.

Two outcome families are covered:

* the linear-interaction model
  ``Y = b0 + b1*A + b2*X + b3*Z + b4*A*X + b5*A*Z + noise``
  with ``(X, Z)`` bivariate normal and ``Z`` never shown to the analyst;
* the quadratic randomized trial ``Y = A*(X1**2 - X2**2) + A*Z**2 + A``.

Datasets carry both potential outcomes for every unit, so the true
individual effect is always available next to what an analyst would see.
"""

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import math

import numpy as np

from ._backend import kernels
from .errors import ParameterDomainError
from .seeding import make_rng

IGNORABLE_LOGISTIC = "ignorable-logistic"
CONFOUNDED_LOGISTIC = "confounded-logistic"
CONSTANT = "constant"
PROPENSITY_KINDS = (IGNORABLE_LOGISTIC, CONFOUNDED_LOGISTIC, CONSTANT)
_KIND_CODES = {IGNORABLE_LOGISTIC: 0, CONFOUNDED_LOGISTIC: 1, CONSTANT: 2}


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ParameterDomainError(name, f"must be finite, got {value!r}")


@dataclass(frozen=True)
class GaussianPairParams:
    """Moments of the jointly Gaussian covariate pair ``(X, Z)``."""

    mu_x: float = 0.0
    mu_z: float = 0.0
    sigma_x: float = 1.0
    sigma_z: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        for name in ("mu_x", "mu_z", "sigma_x", "sigma_z", "rho"):
            _require_finite(name, getattr(self, name))
        if self.sigma_x <= 0:
            raise ParameterDomainError("sigma_x", f"must be positive, got {self.sigma_x}")
        if self.sigma_z <= 0:
            raise ParameterDomainError("sigma_z", f"must be positive, got {self.sigma_z}")
        if not abs(self.rho) < 1:
            raise ParameterDomainError("rho", f"must satisfy |rho| < 1, got {self.rho}")

    @classmethod
    def demo(cls, rho):
        """Return ``X ~ N(0, 1)``, ``Z ~ N(0, 9)`` with correlation ``rho``."""
        return cls(mu_x=0.0, mu_z=0.0, sigma_x=1.0, sigma_z=3.0, rho=rho)

    def covariance(self):
        off = self.rho * self.sigma_x * self.sigma_z
        return np.array([[self.sigma_x**2, off], [off, self.sigma_z**2]])

    def cholesky(self):
        """Lower-triangular factor ``(l00, l10, l11)`` of :meth:`covariance`."""
        return cholesky_2x2(self.covariance())

    def conditional_mean_z(self, x):
        """``E[Z | X = x]`` under the bivariate normal law."""
        return self.mu_z + self.rho * (self.sigma_z / self.sigma_x) * (x - self.mu_x)

    def conditional_sd_z(self):
        return self.sigma_z * math.sqrt(1.0 - self.rho**2)


def cholesky_2x2(cov):
    """Cholesky factor of a symmetric positive-definite 2x2 matrix.

    Returns the nonzero entries ``(l00, l10, l11)`` of ``L`` with
    ``L @ L.T == cov``.
    """
    c00, c10, c11 = float(cov[0][0]), float(cov[1][0]), float(cov[1][1])
    if c00 <= 0:
        raise ParameterDomainError("covariance", "leading entry must be positive")
    l00 = math.sqrt(c00)
    l10 = c10 / l00
    schur = c11 - l10 * l10
    if schur <= 0:
        raise ParameterDomainError("covariance", "matrix is not positive definite")
    return l00, l10, math.sqrt(schur)


@dataclass(frozen=True)
class PropensitySpec:
    """Treatment assignment mechanism ``Pr(A = 1 | X, Z)``.

    ``kind`` is one of ``"ignorable-logistic"`` (``1/(1+exp(-x))``),
    ``"confounded-logistic"`` (``1/(1+exp(z-x))``) or ``"constant"``
    (``p`` for everyone). ``p`` is only meaningful for ``"constant"``.
    """

    kind: str = IGNORABLE_LOGISTIC
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in PROPENSITY_KINDS:
            raise ParameterDomainError("kind", f"unknown propensity {self.kind!r}; expected one of {PROPENSITY_KINDS}")
        _require_finite("p", self.p)
        if self.kind == CONSTANT and not 0 < self.p < 1:
            raise ParameterDomainError("p", f"constant propensity must lie in (0, 1), got {self.p}")

    @classmethod
    def ignorable(cls):
        return cls(IGNORABLE_LOGISTIC)

    @classmethod
    def confounded(cls):
        return cls(CONFOUNDED_LOGISTIC)

    @classmethod
    def constant(cls, p=0.5):
        return cls(CONSTANT, p)

    @property
    def depends_on_z(self):
        return self.kind == CONFOUNDED_LOGISTIC

    @property
    def code(self):
        return _KIND_CODES[self.kind]


def propensity(spec, x, z=0.0):
    """Evaluate the treatment probability; works elementwise on arrays.

    The logistic variants stay strictly inside ``(0, 1)`` as long as the
    logit is below about 36 in magnitude, which covers every covariate value
    the Gaussian designs here produce with non-negligible probability.
    """
    if spec.kind == IGNORABLE_LOGISTIC:
        return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))
    if spec.kind == CONFOUNDED_LOGISTIC:
        return 1.0 / (1.0 + np.exp(np.asarray(z, dtype=float) - np.asarray(x, dtype=float)))
    return np.full(np.shape(x), spec.p) if np.ndim(x) else spec.p


@dataclass(frozen=True)
class LinearInteractionModel:
    """Outcome model linear in ``A``, ``X``, ``Z`` with ``A*X`` and ``A*Z`` terms.

    Setting ``beta4 = beta5 = 0`` gives the constant-effect model used in
    the bias discussion; :meth:`demo` gives ``Y = 3 + A + A(X + Z) + e``.
    """

    beta0: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    beta4: float = 0.0
    beta5: float = 0.0
    noise_sd: float = 1.0

    def __post_init__(self):
        for name in ("beta0", "beta1", "beta2", "beta3", "beta4", "beta5", "noise_sd"):
            _require_finite(name, getattr(self, name))
        if self.noise_sd < 0:
            raise ParameterDomainError("noise_sd", f"must be nonnegative, got {self.noise_sd}")

    @classmethod
    def demo(cls, noise_sd=1.0):
        return cls(beta0=3.0, beta1=1.0, beta2=0.0, beta3=0.0, beta4=1.0, beta5=1.0, noise_sd=noise_sd)

    @property
    def betas(self):
        return (self.beta0, self.beta1, self.beta2, self.beta3, self.beta4, self.beta5)

    @property
    def has_interactions(self):
        return self.beta4 != 0.0 or self.beta5 != 0.0


@dataclass(frozen=True)
class QuadraticRctModel:
    """Completely randomized trial with outcome ``A*(X1^2 - X2^2) + A*Z^2 + A``.

    ``X1``, ``X2`` and ``Z`` are independent standard normals; there is no
    noise term.
    """

    assignment_prob: float = 0.5

    def __post_init__(self):
        _require_finite("assignment_prob", self.assignment_prob)
        if not 0 < self.assignment_prob < 1:
            raise ParameterDomainError("assignment_prob", f"must lie in (0, 1), got {self.assignment_prob}")


@dataclass(frozen=True)
class Unit:
    x: float
    z: float
    a: int
    y0: float
    y1: float
    y: float
    ite: float


@dataclass(frozen=True)
class RctUnit:
    x1: float
    x2: float
    z: float
    a: int
    y0: float
    y1: float
    y: float
    ite: float


class Provenance(NamedTuple):
    scenario: Optional[str]
    replication: Optional[int]
    seed: int


def _check_consistency(a, y0, y1, y, ite):
    treated = a == 1
    if not np.all((a == 0) | treated):
        raise AssertionError("treatment indicator must be binary")
    if not np.array_equal(y, np.where(treated, y1, y0)):
        raise AssertionError("observed outcome does not match the assigned potential outcome")
    if not np.array_equal(ite, y1 - y0):
        raise AssertionError("stored ITE differs from y1 - y0")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Columnar sample from a linear-interaction process.

    Each array has one entry per unit. ``a`` is ``int8``; all other columns
    are ``float64``.
    """

    x: np.ndarray
    z: np.ndarray
    a: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    y: np.ndarray
    ite: np.ndarray
    provenance: Provenance
    columns = ("x", "z", "a", "y0", "y1", "y", "ite")

    def __len__(self):
        return self.x.shape[0]

    def unit(self, i):
        return Unit(float(self.x[i]), float(self.z[i]), int(self.a[i]), float(self.y0[i]),
                    float(self.y1[i]), float(self.y[i]), float(self.ite[i]))

    def units(self) -> Iterator[Unit]:
        for i in range(len(self)):
            yield self.unit(i)

    def check_consistency(self):
        """Raise ``AssertionError`` unless ``y`` and ``ite`` agree with ``(a, y0, y1)``."""
        _check_consistency(self.a, self.y0, self.y1, self.y, self.ite)

    def same_contents(self, other):
        return type(self) is type(other) and all(
            np.array_equal(getattr(self, c), getattr(other, c)) for c in self.columns)


@dataclass(frozen=True, eq=False)
class RctDataset:
    """Columnar sample from :class:`QuadraticRctModel`."""

    x1: np.ndarray
    x2: np.ndarray
    z: np.ndarray
    a: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    y: np.ndarray
    ite: np.ndarray
    provenance: Provenance
    columns = ("x1", "x2", "z", "a", "y0", "y1", "y", "ite")

    def __len__(self):
        return self.x1.shape[0]

    def unit(self, i):
        return RctUnit(float(self.x1[i]), float(self.x2[i]), float(self.z[i]), int(self.a[i]),
                       float(self.y0[i]), float(self.y1[i]), float(self.y[i]), float(self.ite[i]))

    def units(self) -> Iterator[RctUnit]:
        for i in range(len(self)):
            yield self.unit(i)

    def check_consistency(self):
        _check_consistency(self.a, self.y0, self.y1, self.y, self.ite)

    def same_contents(self, other):
        return type(self) is type(other) and all(
            np.array_equal(getattr(self, c), getattr(other, c)) for c in self.columns)


def sample_covariates(params, rng, n):
    """Draw ``n`` pairs ``(x, z)`` through the Cholesky factor of the covariance."""
    l00, l10, l11 = params.cholesky()
    g = rng.standard_normal((n, 2))
    x = params.mu_x + l00 * g[:, 0]
    z = params.mu_z + (l10 * g[:, 0] + l11 * g[:, 1])
    return x, z


def sample_covariate_pair(params, rng):
    x, z = sample_covariates(params, rng, 1)
    return float(x[0]), float(z[0])


def _require_count(n):
    if int(n) != n or n < 1:
        raise ParameterDomainError("n", f"must be a positive integer, got {n!r}")
    return int(n)


def generate_dataset(model, params, spec, n, seed, scenario=None, replication=None):
    """Sample ``n`` units from the linear-interaction process.

    Draw order from the seeded stream is fixed: an ``(n, 2)`` block of
    standard normals for the covariates, ``n`` outcome-noise normals, then
    ``n`` uniforms for treatment assignment. Both potential outcomes share the
    unit's noise draw, so ``ite`` is free of noise.
    """
    n = _require_count(n)
    l00, l10, l11 = params.cholesky()
    rng = make_rng(seed)
    g = rng.standard_normal((n, 2))
    e = rng.standard_normal(n)
    u = rng.random(n)
    x, z, a, y0, y1, y, ite = kernels.simulate_linear(
        g, e, u, params.mu_x, params.mu_z, l00, l10, l11,
        model.betas, model.noise_sd, spec.code, spec.p)
    return Dataset(x, z, a, y0, y1, y, ite, Provenance(scenario, replication, int(seed)))


def true_ite(model, x, z):
    """Individual effect ``b1 + b4*x + b5*z``."""
    return model.beta1 + model.beta4 * x + model.beta5 * z


def cate_coefficients(model, params):
    """Intercept and slope of the population CATE as a linear function of x."""
    ratio = params.rho * (params.sigma_z / params.sigma_x)
    intercept = model.beta1 + model.beta5 * (params.mu_z - ratio * params.mu_x)
    slope = model.beta4 + model.beta5 * ratio
    return intercept, slope


def true_cate(model, params, x):
    """``E[Y(1) - Y(0) | X = x]`` with ``Z`` integrated out given ``X``.

    Evaluated in collected form ``intercept + slope * x`` so that a zero slope
    gives an exactly constant function.
    """
    intercept, slope = cate_coefficients(model, params)
    return intercept + slope * x


def generate_rct_dataset(model, n, seed, scenario=None, replication=None):
    """Sample ``n`` units from the quadratic randomized trial."""
    n = _require_count(n)
    rng = make_rng(seed)
    cov = rng.standard_normal((n, 3))
    u = rng.random(n)
    x1, x2, z = cov[:, 0].copy(), cov[:, 1].copy(), cov[:, 2].copy()
    a = (u < model.assignment_prob).astype(np.int8)
    y0 = np.zeros(n)
    y1 = x1**2 - x2**2 + z**2 + 1.0
    y = np.where(a == 1, y1, y0)
    ite = y1 - y0
    return RctDataset(x1, x2, z, a, y0, y1, y, ite, Provenance(scenario, replication, int(seed)))


def rct_cate_oracle(axis, value):
    """CATE of the quadratic trial given one observed covariate.

    ``axis="X1"`` gives ``value**2 + 1``; ``axis="X2"`` gives ``3 - value**2``.
    """
    key = str(axis).upper()
    if key == "X1":
        return value**2 + 1.0
    if key == "X2":
        return 3.0 - value**2
    raise ParameterDomainError("axis", f"must be 'X1' or 'X2', got {axis!r}")

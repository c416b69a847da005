"""Seeded Monte Carlo experiments over the data-generating processes.

Every replication draws from its own stream, seeded by
``derive_seed(master_seed, rep_index)``. Results are merged by replication
index, so a report is identical whether replications run sequentially or on
a thread pool of any size.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import logging

import numpy as np

from .dgp import (
    CONSTANT,
    GaussianPairParams,
    LinearInteractionModel,
    PropensitySpec,
    QuadraticRctModel,
    generate_dataset,
    generate_rct_dataset,
    rct_cate_oracle,
    sample_covariates,
    true_cate,
    true_ite,
)
from .discordance import (
    DiscordanceReport,
    cate_ite_correlation,
    cate_ite_covariance,
    cate_mse,
    discordance_report,
    empirical_discordance,
)
from .errors import CatelabError, ConfigError, ParameterDomainError, ReplicationError
from .estimators import fit_working_model, predict_cate
from .seeding import derive_seed, make_rng

log = logging.getLogger(__name__)

LINEAR = "linear"
RCT = "rct"
APPENDIX_SWEEP = "appendix-sweep"
EXPERIMENTS = (LINEAR, RCT, APPENDIX_SWEEP)

BAND_QUANTILES = (0.025, 0.975)
RCT_BIN_RANGE = (-2.5, 2.5)


@dataclass(frozen=True)
class Grid:
    lo: float = -3.0
    hi: float = 3.0
    points: int = 61

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 2:
            raise ParameterDomainError("grid.points", f"must be an integer >= 2, got {self.points}")
        if not self.lo < self.hi:
            raise ParameterDomainError("grid.lo", f"must be below grid.hi ({self.lo} >= {self.hi})")

    def values(self):
        return np.linspace(self.lo, self.hi, int(self.points))


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully reproducible experiment.

    ``experiment`` selects what a replication does:

    ``"linear"``
        sample ``n_units`` from ``dgp`` (a :class:`LinearInteractionModel`),
        fit the working model and score the CATE estimate;
    ``"rct"``
        sample ``n_units`` from a :class:`QuadraticRctModel` and compute
        binned difference-in-means curves on both observed covariates;
    ``"appendix-sweep"``
        draw ``n_replications`` random ``(beta4, beta5, rho, sigma_x,
        sigma_z)`` vectors and compare the closed-form CATE/ITE correlation
        with a Monte Carlo estimate from ``n_units`` draws each.
    """

    name: str
    dgp: Union[LinearInteractionModel, QuadraticRctModel]
    covariates: GaussianPairParams = field(default_factory=GaussianPairParams)
    propensity: PropensitySpec = field(default_factory=PropensitySpec)
    n_units: int = 2500
    n_replications: int = 1000
    master_seed: int = 0
    grid: Optional[Grid] = None
    experiment: str = LINEAR
    bins: int = 25

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name or any(c.isspace() for c in self.name):
            raise ConfigError(f"scenario name must be a nonempty identifier, got {self.name!r}", field="name")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}",
                              field="experiment")
        for key in ("n_units", "n_replications", "bins"):
            value = getattr(self, key)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ParameterDomainError(key, f"must be a positive integer, got {value!r}")
        if self.bins < 3:
            raise ParameterDomainError("bins", f"must be >= 3, got {self.bins}")
        if self.experiment == RCT:
            if not isinstance(self.dgp, QuadraticRctModel):
                raise ConfigError("experiment 'rct' needs a quadratic-rct dgp", field="dgp.kind")
            if self.propensity.kind != CONSTANT or self.propensity.p != self.dgp.assignment_prob:
                raise ConfigError("randomized trial needs a constant propensity equal to assignment_prob",
                                  field="propensity.kind")
        elif not isinstance(self.dgp, LinearInteractionModel):
            raise ConfigError(f"experiment {self.experiment!r} needs a linear dgp", field="dgp.kind")


@dataclass
class ReplicationRecords:
    """Per-unit outputs of one linear replication."""

    x: np.ndarray
    ite_true: np.ndarray
    cate_true: np.ndarray
    cate_hat: np.ndarray

    def __len__(self):
        return self.x.shape[0]


@dataclass
class ReplicationResult:
    rep_index: int
    seed: int
    fit: object
    records: ReplicationRecords
    mse: float


def replication_seed(config, rep_index):
    return derive_seed(config.master_seed, rep_index)


def _check_index(config, rep_index):
    if not 0 <= rep_index < config.n_replications:
        raise IndexError(f"rep_index {rep_index} outside [0, {config.n_replications})")


def run_replication(config, rep_index):
    """Generate, fit and score one replication of a linear scenario.

    Raises
    ------
    ReplicationError
        Wrapping any catelab error, tagged with ``rep_index``.
    """
    _check_index(config, rep_index)
    if config.experiment != LINEAR:
        raise ConfigError(f"run_replication needs a linear scenario, got {config.experiment!r}")
    seed = replication_seed(config, rep_index)
    try:
        ds = generate_dataset(config.dgp, config.covariates, config.propensity, config.n_units, seed,
                              scenario=config.name, replication=rep_index)
        fit = fit_working_model(ds)
    except CatelabError as exc:
        raise ReplicationError(rep_index, exc) from exc
    cate_hat = predict_cate(fit, ds.x)
    cate_true = true_cate(config.dgp, config.covariates, ds.x)
    records = ReplicationRecords(ds.x, ds.ite, cate_true, cate_hat)
    return ReplicationResult(rep_index, seed, fit, records, cate_mse(cate_hat, cate_true))


@dataclass(frozen=True)
class GridPoint:
    x: float
    mean_estimate: float
    band_lo: float
    band_hi: float
    truth: float

    @property
    def covers_truth(self):
        return self.band_lo <= self.truth <= self.band_hi


@dataclass(frozen=True)
class BinnedContrast:
    axis: str
    bin_center: float
    contrast: float
    oracle_value: float
    se: float
    n_treated: int
    n_control: int
    flagged: bool


@dataclass(frozen=True)
class AppendixRow:
    index: int
    constructed: bool
    beta4: float
    beta5: float
    rho: float
    sigma_x: float
    sigma_z: float
    closed_form_cov: float
    empirical_cov: float
    closed_form_corr: float
    empirical_corr: Optional[float]

    @property
    def abs_diff(self):
        if self.empirical_corr is None:
            return None
        return abs(self.closed_form_corr - self.empirical_corr)


@dataclass
class AggregateReport:
    """Everything a scenario run produces.

    ``mean_mse`` is the mean of ``per_replication_mse`` over successful
    replications; ``failed`` lists ``(rep_index, message)`` for the rest.
    ``scatter_sample`` holds the per-unit records of the first successful
    replication (replication 0 unless it failed).
    """

    scenario: str
    experiment: str
    per_replication_mse: list
    mean_mse: float
    n_succeeded: int
    failed: list = field(default_factory=list)
    grid_summary: Optional[list] = None
    scatter_sample: Optional[ReplicationRecords] = None
    scatter_replication: Optional[int] = None
    coefficients: Optional[np.ndarray] = None
    discordance: Optional[DiscordanceReport] = None
    rct_bins: Optional[dict] = None
    appendix_rows: Optional[list] = None

    def band_coverage(self):
        """Fraction of grid points whose band contains the true CATE."""
        if not self.grid_summary:
            return None
        return sum(p.covers_truth for p in self.grid_summary) / len(self.grid_summary)

    def heterogeneity_ratio(self):
        """``Var(cate_hat) / Var(ite_true)`` within the scatter replication."""
        rec = self.scatter_sample
        if rec is None:
            return None
        denom = np.var(rec.ite_true)
        return float(np.var(rec.cate_hat) / denom) if denom > 0 else None


def _map(fn, indices, threads):
    if threads <= 1:
        return map(fn, indices)
    pool = ThreadPoolExecutor(max_workers=threads)
    try:
        return list(pool.map(fn, indices))
    finally:
        pool.shutdown()


def _safe(fn):
    def call(i):
        try:
            return fn(i)
        except ReplicationError as exc:
            return exc
    return call


def grid_summary(config, coefficients, grid=None):
    """Mean estimate and empirical 2.5/97.5% band of the CATE at each grid x."""
    grid = grid or config.grid or Grid()
    xs = grid.values()
    estimates = coefficients[:, 1][:, None] + coefficients[:, 3][:, None] * xs[None, :]
    means = estimates.mean(axis=0)
    lo, hi = np.quantile(estimates, BAND_QUANTILES, axis=0)
    truth = true_cate(config.dgp, config.covariates, xs)
    return [GridPoint(float(x), float(m), float(min(l, m)), float(max(h, m)), float(t))
            for x, m, l, h, t in zip(xs, means, lo, hi, truth)]


def run_scenario(config, threads=1):
    """Run every replication of ``config`` and aggregate the results."""
    if config.experiment == RCT:
        return _run_rct(config, threads)
    if config.experiment == APPENDIX_SWEEP:
        return _run_appendix(config, threads)
    mses, coefs, failed = [], [], []
    scatter, scatter_rep, fit0 = None, None, None
    for i, res in enumerate(_map(_safe(lambda k: run_replication(config, k)), range(config.n_replications), threads)):
        if isinstance(res, ReplicationError):
            log.warning("%s: %s", config.name, res)
            failed.append((res.rep_index, str(res.cause)))
            continue
        mses.append(res.mse)
        coefs.append(res.fit.coefficients)
        if scatter is None:
            scatter, scatter_rep = res.records, res.rep_index
    report = AggregateReport(
        scenario=config.name,
        experiment=config.experiment,
        per_replication_mse=mses,
        mean_mse=float(np.mean(mses)) if mses else float("nan"),
        n_succeeded=len(mses),
        failed=failed,
        scatter_sample=scatter,
        scatter_replication=scatter_rep,
        coefficients=np.array(coefs) if coefs else np.empty((0, 4)),
    )
    if coefs and config.grid is not None:
        report.grid_summary = grid_summary(config, report.coefficients)
    if scatter is not None:
        report.discordance = discordance_report(config.dgp, config.covariates, scatter.cate_hat,
                                                scatter.ite_true, report.mean_mse)
    return report


def rct_binned_cates(dataset, axis, bins, lo=RCT_BIN_RANGE[0], hi=RCT_BIN_RANGE[1]):
    """Difference in means within equal-width bins of one observed covariate.

    Units outside ``[lo, hi]`` are dropped. A bin missing either arm is
    returned with ``flagged=True`` and a NaN contrast. ``se`` is the usual
    unpooled two-sample standard error.
    """
    key = str(axis).upper()
    if key not in ("X1", "X2"):
        raise ParameterDomainError("axis", f"must be 'X1' or 'X2', got {axis!r}")
    if bins < 3:
        raise ParameterDomainError("bins", f"must be >= 3, got {bins}")
    v = np.asarray(dataset.x1 if key == "X1" else dataset.x2)
    width = (hi - lo) / bins
    inside = (v >= lo) & (v <= hi)
    idx = np.minimum(((v[inside] - lo) / width).astype(np.int64), bins - 1)
    y = np.asarray(dataset.y)[inside]
    treated = np.asarray(dataset.a)[inside] == 1
    out = []
    for b in range(bins):
        center = lo + (b + 0.5) * width
        in_bin = idx == b
        y1 = y[in_bin & treated]
        y0 = y[in_bin & ~treated]
        oracle = rct_cate_oracle(key, center)
        if y1.size == 0 or y0.size == 0:
            out.append(BinnedContrast(key, center, float("nan"), oracle, float("nan"), y1.size, y0.size, True))
            continue
        var1 = y1.var(ddof=1) if y1.size > 1 else float("nan")
        var0 = y0.var(ddof=1) if y0.size > 1 else float("nan")
        se = float(np.sqrt(var1 / y1.size + var0 / y0.size))
        out.append(BinnedContrast(key, center, float(y1.mean() - y0.mean()), oracle, se, y1.size, y0.size, False))
    return out


def quadratic_curvature(binned):
    """Leading coefficient of a quadratic fitted to the unflagged bin contrasts."""
    usable = [b for b in binned if not b.flagged]
    if len(usable) < 3:
        raise ParameterDomainError("bins", "need at least 3 unflagged bins for a quadratic fit")
    centers = np.array([b.bin_center for b in usable])
    values = np.array([b.contrast for b in usable])
    return float(np.polyfit(centers, values, 2)[0])


def _rct_replication(config, rep_index):
    seed = replication_seed(config, rep_index)
    ds = generate_rct_dataset(config.dgp, config.n_units, seed, scenario=config.name, replication=rep_index)
    bins = {axis: rct_binned_cates(ds, axis, config.bins) for axis in ("X1", "X2")}
    errs = [b.contrast - b.oracle_value for rows in bins.values() for b in rows if not b.flagged]
    mse = float(np.mean(np.square(errs))) if errs else float("nan")
    return rep_index, bins, mse


def _run_rct(config, threads):
    results = list(_map(lambda k: _rct_replication(config, k), range(config.n_replications), threads))
    mses = [mse for _, _, mse in results]
    return AggregateReport(
        scenario=config.name,
        experiment=config.experiment,
        per_replication_mse=mses,
        mean_mse=float(np.mean(mses)),
        n_succeeded=len(results),
        rct_bins={rep: bins for rep, bins, _ in results},
    )


def _appendix_row(config, index, constructed):
    rng = make_rng(derive_seed(config.master_seed, index))
    b5 = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]) if constructed else rng.uniform(-2.0, 2.0)
    b4 = rng.uniform(-2.0, 2.0)
    rho = rng.uniform(-0.9, 0.9)
    sx, sz = rng.uniform(0.5, 3.0, size=2)
    if constructed:
        # Same expression as the CATE slope, so b4 + b5*rho*(sz/sx) is exactly 0.
        b4 = -(b5 * (rho * (sz / sx)))
    base = config.dgp
    model = LinearInteractionModel(base.beta0, base.beta1, base.beta2, base.beta3, float(b4), float(b5), base.noise_sd)
    params = GaussianPairParams(config.covariates.mu_x, config.covariates.mu_z, float(sx), float(sz), float(rho))
    x, z = sample_covariates(params, rng, config.n_units)
    emp = empirical_discordance(true_cate(model, params, x), true_ite(model, x, z))
    return AppendixRow(index, constructed, model.beta4, model.beta5, params.rho, params.sigma_x, params.sigma_z,
                       cate_ite_covariance(model, params), emp.covariance,
                       cate_ite_correlation(model, params), emp.correlation)


N_CONSTRUCTED_ZERO = 2


def appendix_sweep(config, threads=1):
    """Closed-form vs Monte Carlo CATE/ITE correlation on random parameters.

    Rows ``0 .. n_replications-1`` are random; the last
    ``N_CONSTRUCTED_ZERO`` rows are built so the CATE slope is exactly zero.
    """
    n_random = config.n_replications
    tasks = [(i, False) for i in range(n_random)] + [(n_random + j, True) for j in range(N_CONSTRUCTED_ZERO)]
    return list(_map(lambda t: _appendix_row(config, *t), tasks, threads))


def _run_appendix(config, threads):
    rows = appendix_sweep(config, threads)
    diffs = [r.abs_diff for r in rows if r.abs_diff is not None]
    return AggregateReport(
        scenario=config.name,
        experiment=config.experiment,
        per_replication_mse=[d * d for d in diffs],
        mean_mse=float(np.mean(np.square(diffs))) if diffs else float("nan"),
        n_succeeded=len(rows),
        appendix_rows=rows,
    )

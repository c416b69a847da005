"""catelab: conditional average vs individual treatment effects, by simulation."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .dgp import (  # noqa: E402
    GaussianPairParams,
    LinearInteractionModel,
    PropensitySpec,
    QuadraticRctModel,
    generate_dataset,
    generate_rct_dataset,
    propensity,
    rct_cate_oracle,
    sample_covariate_pair,
    true_cate,
    true_ite,
)
from .discordance import (  # noqa: E402
    cate_ite_correlation,
    cate_ite_covariance,
    cate_mse,
    empirical_discordance,
)
from .estimators import (  # noqa: E402
    decompose_naive_bias,
    fit_working_model,
    naive_difference_in_means,
    predict_cate,
)
from .harness import ScenarioConfig, rct_binned_cates, run_replication, run_scenario  # noqa: E402

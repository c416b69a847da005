"""Scenario configuration files and built-in presets.

A config file holds one or more blocks, each opened by a ``[scenario]``
line. Inside a block every line is ``key = value``; keys mirror the
:class:`~catelab.harness.ScenarioConfig` fields, with nested fields written
as dotted paths::

    # high-correlation setting
    [scenario]
    name = fig2-rho-07
    experiment = linear
    dgp.kind = linear-interaction
    dgp.beta0 = 3
    dgp.beta1 = 1
    dgp.beta4 = 1
    dgp.beta5 = 1
    dgp.noise_sd = 1
    covariates.sigma_z = 3
    covariates.rho = 0.7
    propensity.kind = ignorable-logistic
    n_units = 2500
    n_replications = 1000
    master_seed = 20210723
    grid.lo = -3
    grid.hi = 3
    grid.points = 61

A block may start from a preset with ``preset = <name>`` and override any
field after it. Omitted fields take their defaults. Blank lines and lines
starting with ``#`` are ignored.
"""

from dataclasses import replace

from .dgp import (
    CONSTANT,
    GaussianPairParams,
    LinearInteractionModel,
    PropensitySpec,
    QuadraticRctModel,
)
from .errors import CatelabError, ConfigError, ParameterDomainError
from .harness import APPENDIX_SWEEP, LINEAR, RCT, Grid, ScenarioConfig

DEFAULT_SEED = 20210723
LINEAR_DGP = "linear-interaction"
RCT_DGP = "quadratic-rct"

_LINEAR_KEYS = ("beta0", "beta1", "beta2", "beta3", "beta4", "beta5", "noise_sd")
_COV_KEYS = ("mu_x", "mu_z", "sigma_x", "sigma_z", "rho")
_INT_KEYS = {"n_units", "n_replications", "master_seed", "grid.points", "bins"}
_STR_KEYS = {"name", "experiment", "dgp.kind", "propensity.kind", "preset"}
KNOWN_KEYS = (
    {"name", "experiment", "n_units", "n_replications", "master_seed", "bins", "preset",
     "dgp.kind", "dgp.assignment_prob", "propensity.kind", "propensity.p",
     "grid.lo", "grid.hi", "grid.points"}
    | {f"dgp.{k}" for k in _LINEAR_KEYS}
    | {f"covariates.{k}" for k in _COV_KEYS}
)


def _demo_linear(name, rho, propensity, seed=DEFAULT_SEED):
    return ScenarioConfig(
        name=name,
        dgp=LinearInteractionModel.demo(),
        covariates=GaussianPairParams.demo(rho),
        propensity=propensity,
        n_units=2500,
        n_replications=1000,
        master_seed=seed,
        grid=Grid(),
        experiment=LINEAR,
    )


def _build_presets():
    presets = [
        _demo_linear("fig2-rho-neg03", -0.3, PropensitySpec.ignorable()),
        _demo_linear("fig2-rho-07", 0.7, PropensitySpec.ignorable()),
        _demo_linear("fig3-confounded", 0.7, PropensitySpec.confounded()),
        _demo_linear("constant-cate", -1.0 / 3.0, PropensitySpec.ignorable()),
        ScenarioConfig(
            name="appendix-sweep",
            dgp=LinearInteractionModel.demo(),
            covariates=GaussianPairParams(),
            propensity=PropensitySpec.ignorable(),
            n_units=1_000_000,
            n_replications=20,
            master_seed=DEFAULT_SEED,
            experiment=APPENDIX_SWEEP,
        ),
        ScenarioConfig(
            name="rct-quadratic",
            dgp=QuadraticRctModel(0.5),
            covariates=GaussianPairParams(),
            propensity=PropensitySpec.constant(0.5),
            n_units=1_000_000,
            n_replications=1,
            master_seed=DEFAULT_SEED,
            experiment=RCT,
            bins=25,
        ),
    ]
    return {p.name: p for p in presets}


PRESETS = _build_presets()
PRESET_DESCRIPTIONS = {
    "fig2-rho-neg03": "Y = 3 + A + A(X+Z) + e, rho = -0.3, logistic-in-x assignment, 1000 x 2500",
    "fig2-rho-07": "same process with rho = 0.7",
    "fig3-confounded": "rho = 0.7 with assignment logistic in z - x (Z confounds)",
    "constant-cate": "rho = -1/3, where the true CATE is the constant 1",
    "appendix-sweep": "closed-form vs Monte Carlo CATE/ITE correlation, 20 random models x 1e6 draws",
    "rct-quadratic": "randomized trial Y = A(X1^2 - X2^2) + A Z^2 + A, binned CATEs, 1e6 units",
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}", field="preset") from None


def to_dict(config):
    """JSON-ready nested dict sufficient to rebuild ``config`` exactly."""
    if isinstance(config.dgp, QuadraticRctModel):
        dgp = {"kind": RCT_DGP, "assignment_prob": config.dgp.assignment_prob}
    else:
        dgp = {"kind": LINEAR_DGP, **{k: getattr(config.dgp, k) for k in _LINEAR_KEYS}}
    return {
        "name": config.name,
        "experiment": config.experiment,
        "dgp": dgp,
        "covariates": {k: getattr(config.covariates, k) for k in _COV_KEYS},
        "propensity": {"kind": config.propensity.kind, "p": config.propensity.p},
        "n_units": config.n_units,
        "n_replications": config.n_replications,
        "master_seed": config.master_seed,
        "grid": None if config.grid is None else {
            "lo": config.grid.lo, "hi": config.grid.hi, "points": config.grid.points},
        "bins": config.bins,
    }


def _flatten(d):
    flat = {}
    for key, value in d.items():
        if isinstance(value, dict):
            for sub, v in value.items():
                flat[f"{key}.{sub}"] = v
        elif value is not None:
            flat[key] = value
    return flat


def from_dict(d):
    """Inverse of :func:`to_dict`."""
    return _build(_flatten(d), {})


def to_text(config):
    """Render ``config`` as one ``[scenario]`` block of the config format."""
    lines = ["[scenario]"]
    for key, value in _flatten(to_dict(config)).items():
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _convert(key, raw, line):
    if key in _STR_KEYS:
        return raw
    try:
        if key in _INT_KEYS:
            return int(raw, 0) if isinstance(raw, str) else int(raw)
        return float(raw)
    except (TypeError, ValueError):
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ConfigError(f"expected {kind}, got {raw!r}", line=line, field=key) from None


def _build(values, lines):
    """Construct a ScenarioConfig from flat ``key -> value``.

    ``lines`` maps keys to source line numbers for error context.
    """
    unknown = sorted(set(values) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", line=lines.get(unknown[0]), field=unknown[0])
    vals = {k: _convert(k, v, lines.get(k)) for k, v in values.items()}
    base = get_preset(vals["preset"]) if "preset" in vals else None

    def pick(key, default):
        return vals.get(key, default)

    def fail_domain(exc, prefix):
        key = f"{prefix}.{exc.field}" if prefix and not exc.field.startswith(prefix) else exc.field
        line = lines.get(key, lines.get("__block__"))
        raise ConfigError(str(exc), line=line, field=key) from exc

    base_dgp = base.dgp if base else LinearInteractionModel()
    default_kind = RCT_DGP if isinstance(base_dgp, QuadraticRctModel) else LINEAR_DGP
    dgp_kind = pick("dgp.kind", default_kind)
    try:
        if dgp_kind == LINEAR_DGP:
            src = base_dgp if isinstance(base_dgp, LinearInteractionModel) else LinearInteractionModel()
            dgp = LinearInteractionModel(**{k: pick(f"dgp.{k}", getattr(src, k)) for k in _LINEAR_KEYS})
        elif dgp_kind == RCT_DGP:
            src_p = base_dgp.assignment_prob if isinstance(base_dgp, QuadraticRctModel) else vals.get("propensity.p", 0.5)
            dgp = QuadraticRctModel(pick("dgp.assignment_prob", src_p))
        else:
            raise ConfigError(f"unknown dgp kind {dgp_kind!r}; expected {LINEAR_DGP!r} or {RCT_DGP!r}",
                              line=lines.get("dgp.kind"), field="dgp.kind")
    except ParameterDomainError as exc:
        fail_domain(exc, "dgp")

    try:
        src = base.covariates if base else GaussianPairParams()
        covariates = GaussianPairParams(**{k: pick(f"covariates.{k}", getattr(src, k)) for k in _COV_KEYS})
    except ParameterDomainError as exc:
        fail_domain(exc, "covariates")

    try:
        if isinstance(dgp, QuadraticRctModel):
            default_prop = PropensitySpec.constant(dgp.assignment_prob)
        else:
            default_prop = base.propensity if base else PropensitySpec()
        propensity = PropensitySpec(pick("propensity.kind", default_prop.kind), pick("propensity.p", default_prop.p))
    except ParameterDomainError as exc:
        fail_domain(exc, "propensity")

    grid = base.grid if base else None
    if any(k.startswith("grid.") for k in vals):
        src = grid or Grid()
        try:
            grid = Grid(pick("grid.lo", src.lo), pick("grid.hi", src.hi), pick("grid.points", src.points))
        except ParameterDomainError as exc:
            fail_domain(exc, "")

    if "name" not in vals and base is None:
        raise ConfigError("scenario has no name", line=lines.get("__block__"), field="name")
    default_experiment = base.experiment if base else (RCT if isinstance(dgp, QuadraticRctModel) else LINEAR)
    kwargs = dict(
        name=pick("name", base.name if base else None),
        dgp=dgp,
        covariates=covariates,
        propensity=propensity,
        grid=grid,
        experiment=pick("experiment", default_experiment),
    )
    for key, default in (("n_units", 2500), ("n_replications", 1000), ("master_seed", DEFAULT_SEED), ("bins", 25)):
        kwargs[key] = pick(key, getattr(base, key) if base else default)
    if not 0 <= kwargs["master_seed"] < 2**64:
        raise ConfigError("master_seed must lie in [0, 2**64)", line=lines.get("master_seed"), field="master_seed")
    try:
        return ScenarioConfig(**kwargs)
    except ParameterDomainError as exc:
        fail_domain(exc, "")
    except ConfigError as exc:
        if exc.line is None:
            raise ConfigError(exc.reason, line=lines.get(exc.field, lines.get("__block__")), field=exc.field) from exc
        raise


def parse_text(text, source="<string>"):
    """Parse config text into a list of validated :class:`ScenarioConfig`."""
    blocks = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if line != "[scenario]":
                raise ConfigError(f"unexpected header {line!r}; blocks start with [scenario]", line=lineno)
            current = ({}, {"__block__": lineno})
            blocks.append(current)
            continue
        if current is None:
            raise ConfigError("key outside a [scenario] block", line=lineno)
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        values, lines = current
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", line=lineno, field=key)
        values[key] = value
        lines[key] = lineno
    if not blocks:
        raise ConfigError(f"{source}: no scenarios defined")
    configs = []
    seen = {}
    for values, lines in blocks:
        cfg = _build(values, lines)
        if cfg.name in seen:
            raise ConfigError(f"duplicate scenario name {cfg.name!r} (first defined on line {seen[cfg.name]})",
                              line=lines.get("name", lines["__block__"]), field="name")
        seen[cfg.name] = lines["__block__"]
        configs.append(cfg)
    return configs


def parse_config(path):
    """Read and validate a config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return parse_text(text, source=str(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc.reason}", line=exc.line, field=exc.field) from exc


def with_overrides(config, seed=None, reps=None, n=None):
    """Copy of ``config`` with command-line overrides applied."""
    changes = {}
    if seed is not None:
        changes["master_seed"] = seed
    if reps is not None:
        changes["n_replications"] = reps
    if n is not None:
        changes["n_units"] = n
    if not changes:
        return config
    try:
        return replace(config, **changes)
    except CatelabError as exc:
        raise ConfigError(str(exc)) from exc


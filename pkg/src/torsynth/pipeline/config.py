"""Experiment configuration: JSON with a schema version, strict about unknown keys."""
import json
from dataclasses import asdict, dataclass, field, fields, replace

SCHEMA_VERSION = 1
DATA_CONFIGS = ("real_only", "synthetic_only", "combined")
GENERATORS = ("smote", "vae", "gan")
CLASSIFIERS = ("random_forest", "boosted_trees")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeskSpec:
    n_per_class: int = 2000
    n_features: int = 26
    class_separation: float = 3.0
    seed: int = 0


@dataclass(frozen=True)
class PreprocessSpec:
    dedup: bool = True
    impute: bool = True
    balance: bool = True
    select: bool = True
    band_low: float = 0.05
    band_high: float = 0.75
    target_count: int = None
    test_fraction: float = 0.2
    stratified: bool = True


@dataclass(frozen=True)
class EvaluationSpec:
    bins: int = 50
    bootstrap_resamples: int = 1000
    mia_members: int = None  # default: as many members as there are test rows
    protected_below: float = 0.65
    severe_from: float = 0.80


def _default_generator_params():
    return {"smote": {"k_neighbors": 5},
            "vae": {"epochs": 50, "batch_size": 128, "latent_dim": 16, "hidden_sizes": [64, 32],
                    "beta": 1.0, "learning_rate": 1e-3, "condition_encoder": False,
                    "sample_noise": True},
            "gan": {"epochs": 100, "batch_size": 128, "noise_dim": 32, "hidden_sizes": [64, 64],
                    "learning_rate": 5e-4, "beta1": 0.5}}


def _default_classifier_params():
    return {"random_forest": {"n_trees": 100, "max_depth": 12, "features_per_split": None},
            "boosted_trees": {"n_rounds": 100, "max_depth": 6, "learning_rate": 0.1,
                              "lambda_reg": 1.0}}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; ``input`` of None means the generated desk dataset."""
    input: str = None
    label_column: str = "label"
    desk: DeskSpec = field(default_factory=DeskSpec)
    preprocess: PreprocessSpec = field(default_factory=PreprocessSpec)
    generators: tuple = GENERATORS
    generator_params: dict = field(default_factory=_default_generator_params)
    classifiers: tuple = CLASSIFIERS
    classifier_params: dict = field(default_factory=_default_classifier_params)
    data_configs: tuple = DATA_CONFIGS
    synthetic_ratio: float = 1.0  # synthetic rows per real training row in "combined"
    evaluation: EvaluationSpec = field(default_factory=EvaluationSpec)
    seed: int = 0
    output_dir: str = "report"

    def __post_init__(self):
        validate(self)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def to_dict(self):
        d = asdict(self)
        for key in ("generators", "classifiers", "data_configs"):
            d[key] = list(d[key])
        return {"schema_version": SCHEMA_VERSION, **d}


def _check_keys(where, given, allowed):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _section(cls, where, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(where, raw, [f.name for f in fields(cls)])
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _merge_params(where, raw, defaults):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be an object")
    _check_keys(where, raw, defaults)
    merged = {name: dict(params) for name, params in defaults.items()}
    for name, params in raw.items():
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.{name} must be an object")
        _check_keys(f"{where}.{name}", params, defaults[name])
        merged[name].update(params)
    return merged


def validate(cfg):
    for key, allowed in (("generators", GENERATORS), ("classifiers", CLASSIFIERS),
                         ("data_configs", DATA_CONFIGS)):
        chosen = getattr(cfg, key)
        bad = [c for c in chosen if c not in allowed]
        if bad:
            raise ConfigError(f"{key}: unknown entries {bad}; expected a subset of {list(allowed)}")
        if len(set(chosen)) != len(chosen):
            raise ConfigError(f"{key}: duplicate entries")
    if not cfg.classifiers:
        raise ConfigError("at least one classifier is required")
    if not cfg.data_configs:
        raise ConfigError("at least one data configuration is required")
    if set(cfg.data_configs) - {"real_only"} and not cfg.generators:
        raise ConfigError("synthetic_only and combined need at least one generator")
    if cfg.synthetic_ratio <= 0:
        raise ConfigError("synthetic_ratio must be positive")
    if not 0.0 < cfg.preprocess.test_fraction < 1.0:
        raise ConfigError("preprocess.test_fraction must lie strictly between 0 and 1")
    if not 0.0 <= cfg.preprocess.band_low < cfg.preprocess.band_high <= 1.0:
        raise ConfigError("preprocess band must satisfy 0 <= band_low < band_high <= 1")
    if cfg.evaluation.bootstrap_resamples < 100:
        raise ConfigError("evaluation.bootstrap_resamples must be >= 100")
    if cfg.evaluation.bins < 2:
        raise ConfigError("evaluation.bins must be >= 2")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a non-negative integer")


def config_from_dict(raw):
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = dict(raw)
    version = raw.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    _check_keys("config", raw, [f.name for f in fields(ExperimentConfig)])
    kw = dict(raw)
    if "desk" in kw:
        kw["desk"] = _section(DeskSpec, "desk", kw["desk"])
    if "preprocess" in kw:
        kw["preprocess"] = _section(PreprocessSpec, "preprocess", kw["preprocess"])
    if "evaluation" in kw:
        kw["evaluation"] = _section(EvaluationSpec, "evaluation", kw["evaluation"])
    if "generator_params" in kw:
        kw["generator_params"] = _merge_params("generator_params", kw["generator_params"],
                                               _default_generator_params())
    if "classifier_params" in kw:
        kw["classifier_params"] = _merge_params("classifier_params", kw["classifier_params"],
                                                _default_classifier_params())
    for key in ("generators", "classifiers", "data_configs"):
        if key in kw:
            if not isinstance(kw[key], list):
                raise ConfigError(f"{key} must be a list")
            kw[key] = tuple(kw[key])
    return ExperimentConfig(**kw)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(raw)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
    return path

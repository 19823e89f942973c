"""Pipeline configuration: frozen hyperparameter defaults, a flat key=value
config-file parser, and the config hash stamped into every report.

The file grammar is deliberately tiny (documented in the README): one
``key = value`` per line, ``#`` comments, values parsed as bool/int/float
with quoted or bare strings as fallback. Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable used by the selectors, classifiers, and harness.

    Values of 0 mean "derive from data" where noted. The defaults are frozen
    here and echoed (with their hash) into every emitted report.
    """

    # harness
    folds: int = 5
    alpha: float = 0.05
    # discretization for the information-based rankers and consistency/rough-set
    bins: int = 10
    # kernels
    kernel_degree: int = 2
    kernel_coef0: float = 1.0
    kernel_gamma: float = 0.0  # 0 -> 1 / n_features
    # svm
    svm_c: float = 1.0
    svm_tol: float = 1e-3
    svm_max_passes: int = 200
    # lssvm
    lssvm_gamma: float = 10.0
    # elm
    elm_hidden: int = 50  # cap; effective size is min(n_rows, elm_hidden)
    # decision tree / forest
    dt_max_depth: int = 10
    dt_min_leaf: int = 2
    forest_trees: int = 50
    # logistic regression
    logr_ridge: float = 1e-6
    # neural network trainers
    nn_hidden_units: int = 0  # 0 -> 2 * n_features + 1
    nn_max_epochs: int = 500
    nn_learning_rate: float = 0.01
    nn_momentum: float = 0.9
    nn_lr_adapt_up: float = 1.05
    nn_lr_adapt_down: float = 0.7
    nn_lm_lambda0: float = 1e-3
    nn_tolerance: float = 1e-6
    # genetic algorithm (FS5)
    ga_population: int = 50
    ga_generations: int = 100
    ga_crossover_rate: float = 0.6
    ga_mutation_rate: float = 0.0  # 0 -> 1 / n_features
    ga_elitism: int = 2
    ga_tournament: int = 3
    # CFS best-first search (FS1)
    cfs_stale_limit: int = 5

    def to_flat_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        payload = "&".join(f"{k}={v!r}" for k, v in sorted(self.to_flat_dict().items()))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


_FIELDS = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}


def _parse_value(raw: str, key: str):
    raw = raw.strip()
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        return raw[1:-1]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the flat key=value grammar into a dict of known keys."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        value = _parse_value(raw, key)
        field_type = _FIELDS[key]
        want_float = field_type in (float, "float")
        want_int = field_type in (int, "int")
        if want_float and isinstance(value, int):
            value = float(value)
        if want_float and not isinstance(value, float):
            raise ConfigError(f"{source}:{lineno}: key {key!r} needs a number")
        if want_int and not isinstance(value, int):
            raise ConfigError(f"{source}:{lineno}: key {key!r} needs an integer")
        values[key] = value
    return values


def load_config(path: str | Path | None) -> PipelineConfig:
    """Defaults overlaid with the optional config file."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    overrides = parse_config_text(path.read_text(encoding="utf-8"), source=path.name)
    return dataclasses.replace(PipelineConfig(), **overrides)

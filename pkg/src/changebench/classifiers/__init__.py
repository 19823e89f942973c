"""The eighteen base classifiers behind the experiment grid, all exposing the
uniform fit/score/predict contract of :class:`TrainedModel`."""

from __future__ import annotations

import numpy as np

from ..config import PipelineConfig
from ..errors import ModelError
from .base import FeatureScaler, MajorityModel, TrainedModel, sigmoid, validate_training_data
from .elm import ELM_ACTIVATIONS, ElmModel, fit_elm
from .kernels import KernelSpec, kernel_for_classifier
from .linear import fit_logistic, fit_regression_family, poly_expand
from .lssvm import LssvmModel, fit_lssvm
from .neural import NN_TRAINERS, NeuralModel, NnConfig, fit_neural_net
from .svm import SvmModel, fit_svm
from .tree import DecisionTree, RandomForest, fit_decision_tree, gini_impurity

#: Canonical order of the 18 base classifiers (report row order).
BASE_CLASSIFIER_KINDS: tuple[str, ...] = (
    "LINR", "POLYR", "LOGR", "DT",
    "SVM-LIN", "SVM-POLY", "SVM-RBF",
    "ELM-LIN", "ELM-POLY", "ELM-RBF",
    "LSSVM-LIN", "LSSVM-POLY", "LSSVM-RBF",
    "NGD", "NGDM", "NGDA", "NNM", "NLM",
)

_ELM_ACTIVATION_BY_KIND = {"ELM-LIN": "linear", "ELM-POLY": "polynomial", "ELM-RBF": "rbf"}


def classifier_index(kind: str) -> int:
    try:
        return BASE_CLASSIFIER_KINDS.index(kind)
    except ValueError:
        raise ModelError(f"unknown classifier kind {kind!r}") from None


def nn_config_from(cfg: PipelineConfig) -> NnConfig:
    return NnConfig(
        hidden_units=cfg.nn_hidden_units,
        max_epochs=cfg.nn_max_epochs,
        learning_rate=cfg.nn_learning_rate,
        momentum=cfg.nn_momentum,
        lr_adapt_up=cfg.nn_lr_adapt_up,
        lr_adapt_down=cfg.nn_lr_adapt_down,
        lm_lambda0=cfg.nn_lm_lambda0,
        tolerance=cfg.nn_tolerance,
    )


def fit_classifier(kind: str, X, y, cfg: PipelineConfig | None = None,
                   seed: int = 0) -> TrainedModel:
    """Uniform entry point: fit any of the 18 base classifiers.

    The stochastic fits (ELM, the neural trainers) consume ``seed``; all
    others are deterministic functions of the data and config.
    """
    cfg = cfg or PipelineConfig()
    X = np.asarray(X, dtype=float)
    if kind in ("LINR", "POLYR"):
        return fit_regression_family(kind, X, y)
    if kind == "LOGR":
        return fit_regression_family(kind, X, y, ridge=cfg.logr_ridge)
    if kind == "DT":
        return fit_decision_tree(X, y, max_depth=cfg.dt_max_depth, min_leaf=cfg.dt_min_leaf)
    if kind.startswith("SVM-"):
        kernel = kernel_for_classifier(kind, cfg.kernel_degree, cfg.kernel_gamma, cfg.kernel_coef0)
        return fit_svm(X, y, kernel, c=cfg.svm_c, tol=cfg.svm_tol,
                       max_passes=cfg.svm_max_passes, kind=kind)
    if kind.startswith("LSSVM-"):
        kernel = kernel_for_classifier(kind, cfg.kernel_degree, cfg.kernel_gamma, cfg.kernel_coef0)
        return fit_lssvm(X, y, kernel, gamma_reg=cfg.lssvm_gamma, kind=kind)
    if kind in _ELM_ACTIVATION_BY_KIND:
        hidden = max(1, min(X.shape[0], cfg.elm_hidden))
        return fit_elm(X, y, _ELM_ACTIVATION_BY_KIND[kind], hidden, seed, kind=kind)
    if kind in NN_TRAINERS:
        return fit_neural_net(X, y, kind, nn_config_from(cfg), seed)
    raise ModelError(f"unknown classifier kind {kind!r}")


def predict(model: TrainedModel, X) -> np.ndarray:
    """Apply a fitted model's scaler and decision rule; deterministic."""
    return model.predict(X)


__all__ = [
    "BASE_CLASSIFIER_KINDS", "ELM_ACTIVATIONS", "NN_TRAINERS",
    "DecisionTree", "ElmModel", "FeatureScaler", "KernelSpec", "LssvmModel",
    "MajorityModel", "NeuralModel", "NnConfig", "RandomForest", "SvmModel",
    "TrainedModel", "classifier_index", "fit_classifier", "fit_decision_tree",
    "fit_elm", "fit_logistic", "fit_lssvm", "fit_neural_net",
    "fit_regression_family", "fit_svm", "gini_impurity", "kernel_for_classifier",
    "nn_config_from", "poly_expand", "predict", "sigmoid",
    "validate_training_data",
]

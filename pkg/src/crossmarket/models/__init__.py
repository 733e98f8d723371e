"""The ten forecasting methods and their common fit/predict surface.

Eight base methods fit one target stock each from an aligned (window x
features) training block; the two ensembles combine the eight base outputs
per day. Penalized and kernel methods (lasso, ridge, svr) see z-scored
features using training-window statistics stored on the fitted model; OLS
and the tree ensembles operate on raw features.

Default hyperparameters sit at the mid-grid values of the sensitivity grid;
anything passed explicitly overrides them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ConfigError, DataError, DimensionMismatch, WrongArity
from .boosting import (
    fit_adaboost_r2,
    fit_gradient_boost,
    fit_hist_gradient_boost,
)
from .forest import fit_random_forest
from .linear import fit_lasso, fit_ols, fit_ridge, standardize
from .svr import rbf_kernel, solve_epsilon_svr

OLS = "ols"
LASSO = "lasso"
RIDGE = "ridge"
SVR = "svr"
XGB = "xgb"
HGBT = "hgbt"
RF = "rf"
ADABOOST = "adaboost"
ENS_AVG = "ens_avg"
ENS_MED = "ens_med"

BASE_METHODS = (OLS, LASSO, RIDGE, SVR, XGB, HGBT, RF, ADABOOST)
ENSEMBLE_METHODS = (ENS_AVG, ENS_MED)
ALL_METHODS = BASE_METHODS + ENSEMBLE_METHODS

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    OLS: {},
    LASSO: {"lam": 0.1},
    RIDGE: {"lam": 0.1},
    SVR: {"C": 10.0, "eps": 1e-4, "gamma": None, "tol": 1e-4, "max_iter": 10_000},
    XGB: {
        "max_depth": 6,
        "learning_rate": 0.1,
        "n_estimators": 100,
        "reg_lambda": 1.0,
        "gamma": 0.0,
    },
    HGBT: {
        "num_leaves": 31,
        "learning_rate": 0.1,
        "n_estimators": 100,
        "max_bins": 256,
        "min_samples_leaf": 20,
    },
    RF: {
        "n_estimators": 100,
        "max_depth": 10,
        "max_features_frac": 1 / 3,
        "min_samples_leaf": 5,
    },
    ADABOOST: {"max_depth": 5, "n_estimators": 100, "learning_rate": 0.1},
    ENS_AVG: {},
    ENS_MED: {},
}


@dataclass(frozen=True)
class ModelSpec:
    """A method name plus its hyperparameters (defaults merged in)."""

    method: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.method not in ALL_METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        merged = dict(DEFAULT_HYPERPARAMETERS[self.method])
        for key, val in self.hyperparameters.items():
            if key == "seed":
                continue
            if key not in merged:
                raise ConfigError(f"{self.method}: unknown hyperparameter {key!r}")
            merged[key] = val
        if "seed" in self.hyperparameters:
            merged["seed"] = self.hyperparameters["seed"]
        object.__setattr__(self, "hyperparameters", merged)

    @classmethod
    def default(cls, method: str) -> "ModelSpec":
        return cls(method=method)


def default_specs(methods: tuple[str, ...] = ALL_METHODS) -> list[ModelSpec]:
    return [ModelSpec.default(m) for m in methods]


@dataclass
class TrainSet:
    """Aligned predictor block and target vector for one stock's fit."""

    X: np.ndarray
    y: np.ndarray
    feature_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.size:
            raise DataError("TrainSet shapes inconsistent")
        if self.X.shape[1] != len(self.feature_ids):
            raise DataError("feature_ids do not match X columns")
        if self.X.shape[0] < 3:
            raise DataError("TrainSet needs at least 3 rows")
        if np.isnan(self.X).any() or np.isnan(self.y).any():
            raise DataError("TrainSet contains missing values")


@dataclass
class _LinearPredictor:
    alpha: float
    w: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.alpha + X @ self.w


@dataclass
class _SvrPredictor:
    support: np.ndarray
    beta: np.ndarray
    bias: float
    gamma: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.support.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_kernel(X, self.support, self.gamma) @ self.beta + self.bias


@dataclass
class FittedModel:
    """A trained predictor for one target stock."""

    spec: ModelSpec
    feature_ids: tuple[str, ...]
    predictor: Any
    feature_mean: np.ndarray | None = None  # standardization stats, if used
    feature_std: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def predict(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self.feature_ids),):
            raise DimensionMismatch(
                f"expected {len(self.feature_ids)} features, got shape {x.shape}"
            )
        return float(self.predict_batch(x[None, :])[0])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != len(self.feature_ids):
            raise DimensionMismatch(
                f"expected {len(self.feature_ids)} features, got {X.shape[1]}"
            )
        if self.feature_mean is not None:
            X = (X - self.feature_mean) / self.feature_std
        return np.asarray(self.predictor.predict(X), dtype=float)


def fit(spec: ModelSpec, train: TrainSet, seed: int | None = None) -> FittedModel:
    """Fit one base method on one training block; deterministic given seed."""
    if spec.method in ENSEMBLE_METHODS:
        raise ConfigError("ensembles combine base predictions; they are not fit directly")
    hp = spec.hyperparameters
    if seed is None:
        seed = int(hp.get("seed", 0))
    X, y = train.X, train.y
    mean = std = None
    info: dict[str, Any] = {}

    if spec.method == OLS:
        alpha, w = fit_ols(X, y)
        predictor: Any = _LinearPredictor(alpha, w)
    elif spec.method == RIDGE:
        Xs, mean, std = standardize(X)
        alpha, w = fit_ridge(Xs, y, float(hp["lam"]))
        predictor = _LinearPredictor(alpha, w)
    elif spec.method == LASSO:
        Xs, mean, std = standardize(X)
        alpha, w, sweeps, converged = fit_lasso(Xs, y, float(hp["lam"]))
        predictor = _LinearPredictor(alpha, w)
        info = {"sweeps": sweeps, "converged": converged}
    elif spec.method == SVR:
        Xs, mean, std = standardize(X)
        gamma = hp["gamma"]
        if gamma is None:
            var = float(Xs.var())
            gamma = 1.0 / (Xs.shape[1] * var) if var > 0 else 1.0
        K = rbf_kernel(Xs, Xs, float(gamma))
        sol = solve_epsilon_svr(
            K,
            y,
            C=float(hp["C"]),
            eps=float(hp["eps"]),
            tol=float(hp["tol"]),
            max_iter=int(hp["max_iter"]),
        )
        mask = sol.beta != 0.0
        predictor = _SvrPredictor(
            support=Xs[mask], beta=sol.beta[mask], bias=sol.bias, gamma=float(gamma)
        )
        info = {"n_iter": sol.n_iter, "converged": sol.converged, "n_support": int(mask.sum())}
    elif spec.method == XGB:
        predictor = fit_gradient_boost(
            X,
            y,
            n_estimators=int(hp["n_estimators"]),
            max_depth=int(hp["max_depth"]),
            learning_rate=float(hp["learning_rate"]),
            reg_lambda=float(hp["reg_lambda"]),
            gamma=float(hp["gamma"]),
        )
        info = {"train_rss": predictor.train_rss}
    elif spec.method == HGBT:
        predictor = fit_hist_gradient_boost(
            X,
            y,
            n_estimators=int(hp["n_estimators"]),
            num_leaves=int(hp["num_leaves"]),
            learning_rate=float(hp["learning_rate"]),
            min_samples_leaf=int(hp["min_samples_leaf"]),
            max_bins=int(hp["max_bins"]),
        )
        info = {"train_rss": predictor.train_rss}
    elif spec.method == RF:
        predictor = fit_random_forest(
            X,
            y,
            n_estimators=int(hp["n_estimators"]),
            max_depth=int(hp["max_depth"]),
            max_features_frac=float(hp["max_features_frac"]),
            min_samples_leaf=int(hp["min_samples_leaf"]),
            rng=np.random.default_rng(seed),
        )
    elif spec.method == ADABOOST:
        predictor = fit_adaboost_r2(
            X,
            y,
            n_estimators=int(hp["n_estimators"]),
            max_depth=int(hp["max_depth"]),
            learning_rate=float(hp["learning_rate"]),
            rng=np.random.default_rng(seed),
        )
        info = {"n_stages": len(predictor.trees)}
    else:  # pragma: no cover
        raise ConfigError(f"unhandled method {spec.method}")

    return FittedModel(
        spec=spec,
        feature_ids=train.feature_ids,
        predictor=predictor,
        feature_mean=mean,
        feature_std=std,
        info=info,
    )


def predict(model: FittedModel, x: np.ndarray) -> float:
    return model.predict(x)


def ensemble_predict(predictions: np.ndarray, mode: str) -> float:
    """Combine the 8 base-method outputs (fixed BASE_METHODS order)."""
    p = np.asarray(predictions, dtype=float)
    if p.shape != (len(BASE_METHODS),):
        raise WrongArity(f"expected {len(BASE_METHODS)} base predictions, got {p.shape}")
    if mode == "avg" or mode == ENS_AVG:
        return float(p.mean())
    if mode == "med" or mode == ENS_MED:
        return float(np.median(p))
    raise ConfigError(f"unknown ensemble mode {mode!r}")


def dump(model: FittedModel) -> str:
    """Human-readable audit dump of a fitted model."""
    lines = [f"method: {model.spec.method}"]
    hp = {k: v for k, v in model.spec.hyperparameters.items()}
    lines.append(f"hyperparameters: {hp}")
    lines.append(f"features: {','.join(model.feature_ids)}")
    pred = model.predictor
    if isinstance(pred, _LinearPredictor):
        lines.append(f"intercept: {pred.alpha!r}")
        lines.append("coefficients: " + ",".join(repr(float(v)) for v in pred.w))
    elif isinstance(pred, _SvrPredictor):
        lines.append(f"bias: {pred.bias!r} gamma: {pred.gamma!r}")
        lines.append(f"n_support: {pred.support.shape[0]}")
    elif hasattr(pred, "trees"):
        lines.append(f"n_trees: {len(pred.trees)}")
    for key, val in model.info.items():
        if key != "train_rss":
            lines.append(f"{key}: {val}")
    return "\n".join(lines)

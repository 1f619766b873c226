"""Log-log OLS with HC3 robust errors, and the Tier-2/Tier-3 emission predictors."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .accelerators import HardwareGroup
from .errors import InsufficientRows, NonpositiveInput, SingularDesign

INTERCEPT = "intercept"
H_TERM = "hardware_group[H_family]"
OTHERS_TERM = "hardware_group[Others]"
INSTRUCT_TERM = "subtype[instruct]"


@dataclass(frozen=True)
class RegressionModel:
    """``ln(y) = intercept + sum(coef * x)``; missing regressors count as 0."""

    coefficients: Mapping[str, float]
    robust_se: Mapping[str, float] = field(default_factory=dict)
    n_obs: int | None = None

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    def linear_predictor(self, regressors: Mapping[str, float]) -> float:
        unknown = set(regressors) - set(self.coefficients)
        if unknown:
            raise KeyError(f"regressors not in model: {sorted(unknown)}")
        return self.coefficients.get(INTERCEPT, 0.0) + sum(
            self.coefficients[k] * v for k, v in regressors.items())

    def predict(self, regressors: Mapping[str, float]) -> float:
        return math.exp(self.linear_predictor(regressors))

    def to_dict(self) -> dict:
        return {"coefficients": dict(self.coefficients), "robust_se": dict(self.robust_se),
                "n_obs": self.n_obs}

    @classmethod
    def from_dict(cls, data: Mapping) -> "RegressionModel":
        return cls(dict(data["coefficients"]), dict(data.get("robust_se", {})), data.get("n_obs"))


def load_coefficients(path=None) -> dict[str, RegressionModel]:
    """Read ``{"tier2": {...}, "tier3": {...}}`` coefficient fixtures."""
    if path is None:
        text = resources.files("traincarbon.data").joinpath("regression_coefficients.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return {k: RegressionModel.from_dict(v) for k, v in json.loads(text).items()}


_DEFAULTS = load_coefficients()
TIER2_MODEL = _DEFAULTS["tier2"]
TIER3_MODEL = _DEFAULTS["tier3"]


def ols_hc3(X: np.ndarray, y: np.ndarray, rcond: float = 1e-10):
    """Return ``(beta, hc3_cov, leverage, residuals)`` via a thin QR factorization."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < p + 1:
        raise InsufficientRows(f"need at least {p + 1} rows for {p} columns, got {n}")
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= rcond * max(diag.max(), 1.0):
        raise SingularDesign("design matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    leverage = np.einsum("ij,ij->i", q, q)
    r_inv = np.linalg.inv(r)
    bread = r_inv @ r_inv.T  # (X'X)^-1
    with np.errstate(divide="ignore", invalid="ignore"):
        w = resid ** 2 / (1.0 - leverage) ** 2
    meat = (X * w[:, None]).T @ X
    return beta, bread @ meat @ bread, leverage, resid


def fit_ols_loglog(rows: Sequence[tuple[float, Mapping[str, float]]],
                   terms: Sequence[str] | None = None) -> RegressionModel:
    """Fit ``response ~ 1 + regressors`` by OLS with HC3 standard errors.

    ``rows`` holds ``(log_response, {term: value})``; absent terms are 0.
    Term order follows ``terms`` or first appearance.
    """
    if terms is None:
        seen: dict[str, None] = {}
        for _, reg in rows:
            for k in reg:
                seen.setdefault(k, None)
        terms = list(seen)
    terms = [t for t in terms if t != INTERCEPT]
    if len(rows) < len(terms) + 2:
        raise InsufficientRows(f"need at least {len(terms) + 2} rows, got {len(rows)}")
    X = np.array([[1.0] + [float(reg.get(t, 0.0)) for t in terms] for _, reg in rows])
    y = np.array([float(resp) for resp, _ in rows])
    beta, cov, _, _ = ols_hc3(X, y)
    names = [INTERCEPT, *terms]
    se = np.sqrt(np.diag(cov))
    return RegressionModel(dict(zip(names, beta.tolist())), dict(zip(names, se.tolist())), len(rows))


def _check_positive(**values):
    for name, v in values.items():
        if not (v > 0 and math.isfinite(v)):
            raise NonpositiveInput(f"{name} must be positive and finite, got {v}")


def tier2_regressors(flops: float, ef_region: float, group: HardwareGroup | str) -> dict[str, float]:
    _check_positive(flops=flops, ef_region=ef_region)
    group = HardwareGroup(group)
    return {
        "log_flops": math.log(flops),
        "log_ef": math.log(ef_region),
        H_TERM: float(group is HardwareGroup.H_FAMILY),
        OTHERS_TERM: float(group is HardwareGroup.OTHERS),
    }


def tier3_regressors(params: float, ef_region: float, is_instruct: bool) -> dict[str, float]:
    _check_positive(params=params, ef_region=ef_region)
    return {
        "log_params": math.log(params),
        "log_ef": math.log(ef_region),
        INSTRUCT_TERM: float(bool(is_instruct)),
    }


def predict_tier2(flops: float, ef_region: float, group: HardwareGroup | str,
                  model: RegressionModel = TIER2_MODEL) -> float:
    """Emissions (tCO2e) from total FLOPs, grid EF and hardware group."""
    return model.predict(tier2_regressors(flops, ef_region, group))


def predict_tier3(params: float, ef_region: float, is_instruct: bool,
                  model: RegressionModel = TIER3_MODEL) -> float:
    """Emissions (tCO2e) from parameter count, grid EF and instruct flag."""
    return model.predict(tier3_regressors(params, ef_region, is_instruct))

"""L1-penalized Cox regression.

The partial log-likelihood uses Breslow-style risk sets (ties mutually at
risk) and log-sum-exp stabilization. Fitting minimizes the negative
partial log-likelihood plus an L1 penalty by proximal gradient descent
with backtracking, which keeps the objective monotone and produces exact
zeros for inactive coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    SurvivalDataset,
    apply_standardization,
    risk_set_sums,
    standardize_covariates,
)


@dataclass(frozen=True)
class CoxFit:
    """Result of one penalized fit, on the standardized covariate scale."""

    beta_hat: np.ndarray
    lam: float
    mean: np.ndarray
    scale: np.ndarray
    n_iter: int
    objective: float
    objective_trace: np.ndarray = field(repr=False)
    converged: bool = True


def _check_inputs(data: SurvivalDataset, beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (data.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({data.p},)")
    if not np.all(np.isfinite(data.X)):
        raise ValueError("covariates must be finite")
    if not np.all(np.isfinite(beta)):
        raise ValueError("coefficients must be finite")
    return beta


def partial_loglik(data: SurvivalDataset, beta) -> float:
    """Cox partial log-likelihood
    sum_i delta_i [beta'x_i - log sum_{l in R_i} exp(beta'x_l)]."""
    beta = _check_inputs(data, beta)
    eta = data.X @ beta
    shift = float(eta.max()) if eta.size else 0.0
    w = np.exp(eta - shift)
    # the self-term keeps every sum positive mathematically; guard the
    # underflow case so extreme line-search trials stay comparable
    denom = np.maximum(risk_set_sums(data.time, w), 1e-300)
    events = data.event == 1
    return float(np.sum(eta[events] - (np.log(denom[events]) + shift)))


def partial_loglik_grad(data: SurvivalDataset, beta) -> np.ndarray:
    """Score vector: sum_i delta_i [x_i - weighted risk-set mean of x]."""
    beta = _check_inputs(data, beta)
    eta = data.X @ beta
    shift = float(eta.max()) if eta.size else 0.0
    w = np.exp(eta - shift)
    denom = risk_set_sums(data.time, w)
    num = risk_set_sums(data.time, w[:, None] * data.X)
    events = data.event == 1
    return np.sum(data.X[events] - num[events] / denom[events, None], axis=0)


def soft_threshold(z: np.ndarray, thresh: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)


def proximal_gradient(value_fn, grad_fn, lam: float, beta0: np.ndarray,
                      tol: float = 1e-7, max_iter: int = 10_000):
    """Minimize value_fn(beta) + lam * ||beta||_1 by ISTA with backtracking.

    Returns (beta, objective trace). The backtracking condition enforces
    the quadratic upper bound, so the penalized objective never increases.
    """
    beta = np.asarray(beta0, dtype=np.float64).copy()
    g = value_fn(beta)
    if not np.isfinite(g):
        raise RuntimeError("objective not finite at the starting point")
    obj = g + lam * np.abs(beta).sum()
    trace = [obj]
    step = 1.0
    prev_beta = prev_grad = None
    for it in range(1, max_iter + 1):
        grad = grad_fn(beta)
        if prev_beta is not None:
            # Barzilai-Borwein curvature estimate seeds the line search
            db = beta - prev_beta
            dg = grad - prev_grad
            denom = db @ dg
            if denom > 0:
                step = float((db @ db) / denom)
            else:
                step *= 2.0
        prev_beta, prev_grad = beta, grad
        while True:
            cand = soft_threshold(beta - step * grad, step * lam)
            delta = cand - beta
            g_cand = value_fn(cand)
            bound = g + grad @ delta + (delta @ delta) / (2.0 * step)
            if np.isfinite(g_cand) and g_cand <= bound + 1e-12:
                break
            step *= 0.5
            if step < 1e-20:
                raise RuntimeError("line search failed; objective may be diverging")
        beta = cand
        g = g_cand
        new_obj = g + lam * np.abs(beta).sum()
        if not np.isfinite(new_obj):
            raise RuntimeError("objective diverged to a non-finite value")
        trace.append(new_obj)
        rel_change = abs(obj - new_obj) / max(1.0, abs(obj))
        obj = new_obj
        if rel_change < tol:
            return beta, np.asarray(trace), True
    return beta, np.asarray(trace), False


def lambda_max(data: SurvivalDataset) -> float:
    """Smallest penalty that keeps the null model optimal: the sup-norm of
    the gradient at beta = 0, on the standardized scale fit_lasso uses."""
    Z, _, _ = standardize_covariates(data.X)
    zdata = SurvivalDataset(Z, data.time, data.event)
    g = partial_loglik_grad(zdata, np.zeros(data.p))
    return float(np.abs(g).max())


def lambda_path(data: SurvivalDataset, n_points: int = 20,
                ratio: float = 0.01) -> np.ndarray:
    """Log-spaced penalty path from lambda_max down to ratio * lambda_max."""
    top = lambda_max(data)
    if top <= 0:
        return np.zeros(n_points)
    return np.geomspace(top, ratio * top, n_points)


def fit_lasso(data: SurvivalDataset, lam: float, tol: float = 1e-7,
              max_iter: int = 10_000, beta0=None,
              standardized: bool = False) -> CoxFit:
    """Minimize -partial_loglik + lam * ||beta||_1.

    Covariates are standardized internally (transform stored on the fit)
    unless ``standardized`` marks them as already centered and scaled.
    """
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    if standardized:
        Z, mean, scale = data.X, np.zeros(data.p), np.ones(data.p)
        zdata = data
    else:
        Z, mean, scale = standardize_covariates(data.X)
        zdata = SurvivalDataset(Z, data.time, data.event)

    beta0 = np.zeros(data.p) if beta0 is None else np.asarray(beta0, float)
    beta, trace, converged = proximal_gradient(
        lambda b: -partial_loglik(zdata, b),
        lambda b: -partial_loglik_grad(zdata, b),
        lam, beta0, tol=tol, max_iter=max_iter)
    return CoxFit(beta_hat=beta, lam=float(lam), mean=mean, scale=scale,
                  n_iter=trace.size - 1, objective=float(trace[-1]),
                  objective_trace=trace, converged=converged)


def _stratified_folds(event: np.ndarray, nfolds: int, seed: int) -> np.ndarray:
    """Fold labels balanced within each event stratum, seeded."""
    rng = np.random.default_rng(seed)
    labels = np.empty(event.shape[0], dtype=np.int64)
    for value in (0, 1):
        idx = np.flatnonzero(event == value)
        perm = rng.permutation(idx)
        labels[perm] = np.arange(perm.size) % nfolds
    return labels


def cv_lambda(data: SurvivalDataset, nfolds: int, path=None, seed: int = 0,
              tol: float = 1e-7, max_iter: int = 10_000) -> float:
    """Pick the penalty maximizing the cross-validated partial likelihood.

    Uses the Verweij-van Houwelingen criterion: for each fold, the
    difference between the full-data and train-fold partial likelihoods
    at the train-fold solution. Folds whose train or held-out part has no
    events are skipped with a warning.
    """
    if nfolds < 2:
        raise ValueError("need at least two folds")
    path = lambda_path(data) if path is None else np.asarray(path, float)
    if path.size == 0:
        raise ValueError("empty penalty path")

    labels = _stratified_folds(data.event, nfolds, seed)
    scores = np.zeros(path.size)
    used_folds = 0
    for fold in range(nfolds):
        train_idx = np.flatnonzero(labels != fold)
        held = np.flatnonzero(labels == fold)
        if data.event[train_idx].sum() == 0 or data.event[held].sum() == 0:
            warnings.warn(f"fold {fold} has no events on one side; skipped",
                          RuntimeWarning, stacklevel=2)
            continue
        used_folds += 1
        train = data.subset(train_idx)
        Z, mean, scale = standardize_covariates(train.X)
        ztrain = SurvivalDataset(Z, train.time, train.event)
        zfull = SurvivalDataset(apply_standardization(data.X, mean, scale),
                                data.time, data.event)
        beta = np.zeros(data.p)
        for j, lam in enumerate(path):
            fit = fit_lasso(ztrain, lam, tol=tol, max_iter=max_iter,
                            beta0=beta, standardized=True)
            beta = fit.beta_hat
            scores[j] += partial_loglik(zfull, beta) - partial_loglik(ztrain, beta)
    if used_folds == 0:
        raise ValueError("every fold was skipped; cannot cross-validate")
    # path runs from the largest penalty down; prefer the sparser model on ties
    return float(path[int(np.argmax(scores))])


def risk_score(fit: CoxFit, x) -> np.ndarray:
    """exp(beta_hat' z) with the fit's standardization applied to ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != fit.beta_hat.shape[0]:
        raise ValueError(
            f"row has {x.shape[1]} covariates, fit expects {fit.beta_hat.shape[0]}")
    z = apply_standardization(x, fit.mean, fit.scale)
    scores = np.exp(z @ fit.beta_hat)
    return scores if scores.size > 1 else float(scores[0])

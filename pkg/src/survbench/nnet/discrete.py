"""Discrete-time hazard networks.

Observed time is cut into L intervals; every subject is duplicated into
one input row per interval survived, with the interval midpoint appended
as an extra covariate. The network emits the conditional event
probability (discrete hazard) per row through a sigmoid, trained with
cross-entropy against the per-interval death indicator plus a squared-L2
penalty. A one-hidden-layer ReLU net is the shallow variant; the deep
variant adds a second hidden layer. Survival curves are cumulative
products of one minus the predicted hazards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import (
    SurvivalCurve,
    SurvivalDataset,
    apply_standardization,
    standardize_covariates,
)
from .config import TrainConfig
from .mlp import (
    Adam,
    MlpParams,
    init_mlp,
    mlp_backward,
    mlp_forward,
    pack,
    pack_grads,
    squared_norm,
    unpack,
)

HAZARD_CLIP = 1e-12


@dataclass(frozen=True)
class DiscreteTimeGrid:
    """Interval cut points 0 = t_0 < t_1 < ... < t_L and their midpoints."""

    cuts: np.ndarray

    def __post_init__(self):
        cuts = np.asarray(self.cuts, dtype=np.float64)
        if cuts.size < 3 or cuts[0] != 0.0 or np.any(np.diff(cuts) <= 0):
            raise ValueError("cuts must start at 0 and strictly increase, L >= 2")
        cuts.setflags(write=False)
        object.__setattr__(self, "cuts", cuts)

    @property
    def n_intervals(self) -> int:
        return self.cuts.size - 1

    @property
    def midpoints(self) -> np.ndarray:
        return (self.cuts[:-1] + self.cuts[1:]) / 2.0

    def interval_of(self, t) -> np.ndarray:
        """1-based interval index of each time; beyond the last cut maps
        to interval L."""
        t = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.cuts[1:-1], t, side="left") + 1
        return np.minimum(idx, self.n_intervals)


@dataclass(frozen=True)
class DuplicatedBatch:
    """Per-interval training rows: (x_i, a_l) inputs with death targets."""

    features: np.ndarray  # (rows, p + 1), midpoint appended unstandardized
    targets: np.ndarray  # d_il in {0, 1}
    subject: np.ndarray  # original subject index per row
    interval: np.ndarray  # 1-based interval index per row

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]


def build_time_grid(data: SurvivalDataset, n_intervals: int = 20) -> DiscreteTimeGrid:
    """Cut points at empirical quantiles of the observed times."""
    if n_intervals < 2:
        raise ValueError("need at least two intervals")
    if np.unique(data.time).size < n_intervals:
        raise ValueError(
            f"{n_intervals} intervals need at least {n_intervals} distinct times")
    qs = np.quantile(data.time, np.linspace(0.0, 1.0, n_intervals + 1)[1:])
    cuts = np.concatenate([[0.0], qs])
    if np.any(np.diff(cuts) <= 0):
        raise ValueError("quantile cuts collapsed; reduce the interval count")
    return DiscreteTimeGrid(cuts=cuts)


def duplicate(data: SurvivalDataset, grid: DiscreteTimeGrid) -> DuplicatedBatch:
    """One row per (subject, interval survived); the target is 0 except in
    the subject's final interval, where it equals the event indicator."""
    mids = grid.midpoints
    last = grid.interval_of(data.time)
    rows, targets, subject, interval = [], [], [], []
    for i in range(data.n):
        li = int(last[i])
        reps = np.repeat(data.X[i][None, :], li, axis=0)
        feats = np.column_stack([reps, mids[:li]])
        rows.append(feats)
        d = np.zeros(li)
        d[-1] = data.event[i]
        targets.append(d)
        subject.append(np.full(li, i))
        interval.append(np.arange(1, li + 1))
    return DuplicatedBatch(
        features=np.concatenate(rows, axis=0),
        targets=np.concatenate(targets),
        subject=np.concatenate(subject),
        interval=np.concatenate(interval),
    )


def nnsurv_loss_and_grad(params: MlpParams, features: np.ndarray,
                         targets: np.ndarray, lam: float):
    """Summed cross-entropy of the sigmoid hazards plus the squared-L2
    penalty; gradient packed over all parameters.

    Hazards are clipped away from {0, 1} before the logs; the gradient is
    zero where the clip is active, matching the computed loss.
    """
    if lam < 0:
        raise ValueError("ridge weight must be nonnegative")
    h_raw, caches = mlp_forward(params, features)
    h_raw = h_raw[:, 0]
    h = np.clip(h_raw, HAZARD_CLIP, 1.0 - HAZARD_CLIP)
    d = np.asarray(targets, dtype=np.float64)
    ce = -np.sum(d * np.log(h) + (1.0 - d) * np.log1p(-h))
    loss = float(ce) + lam * squared_norm(params)

    # d ce / d z = h - d through the sigmoid, except where clipped
    active = (h_raw > HAZARD_CLIP) & (h_raw < 1.0 - HAZARD_CLIP)
    dz = np.where(active, h_raw - d, 0.0)
    # mlp_backward multiplies by sigmoid'(z) itself, so pass dz / h(1-h)
    denom = np.where(active, h_raw * (1.0 - h_raw), 1.0)
    d_out = (dz / denom)[:, None]
    d_w, d_b = mlp_backward(params, caches, d_out)
    grad = pack_grads(params, d_w, d_b) + 2.0 * lam * pack(params)
    return loss, grad


@dataclass(frozen=True)
class NnsurvFit:
    """Trained discrete-time model: network, time grid, input transform."""

    params: MlpParams
    grid: DiscreteTimeGrid
    mean: np.ndarray  # over the p + 1 duplicated-row features
    scale: np.ndarray
    depth: int
    ridge: float
    loss_trace: np.ndarray


def _mean_cross_entropy(params, features, targets) -> float:
    h, _ = mlp_forward(params, features)
    h = np.clip(h[:, 0], HAZARD_CLIP, 1.0 - HAZARD_CLIP)
    d = targets
    return float(-np.mean(d * np.log(h) + (1.0 - d) * np.log1p(-h)))


def _train_network(features, targets, subject, depth, lam, config: TrainConfig,
                   seed: int):
    """Mini-batch Adam with subject-level validation early stopping."""
    rng = np.random.default_rng(seed)
    p_in = features.shape[1]
    hidden = config.hidden_for(p_in - 1)
    sizes = (p_in,) + (hidden,) * depth + (1,)
    acts = ("relu",) * depth + ("sigmoid",)
    params = init_mlp(sizes, acts, seed=int(rng.integers(2 ** 31)))
    # start the hazards at the marginal event rate instead of 0.5, so the
    # net begins calibrated and training spends itself on the modulation
    q = float(np.clip(targets.mean(), 1e-6, 1.0 - 1e-6))
    params = MlpParams(
        weights=params.weights,
        biases=params.biases[:-1] + (np.array([np.log(q / (1.0 - q))]),),
        activations=params.activations)

    subjects = np.unique(subject)
    n_val = int(round(config.val_fraction * subjects.size))
    val_subjects = rng.permutation(subjects)[:n_val]
    val_mask = np.isin(subject, val_subjects)
    monitor_val = val_mask.sum() >= 3 and (~val_mask).sum() >= 3
    if not monitor_val:
        val_mask = np.zeros(features.shape[0], dtype=bool)
    tr_feat, tr_tgt = features[~val_mask], targets[~val_mask]
    va_feat, va_tgt = features[val_mask], targets[val_mask]

    opt = Adam(lr=config.learning_rate)
    vec = pack(params)
    best_vec, best_score, since_best = vec.copy(), np.inf, 0
    trace = []
    n_rows = tr_feat.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n_rows)
        epoch_loss = 0.0
        for start in range(0, n_rows, config.batch_size):
            take = order[start:start + config.batch_size]
            params = unpack(params, vec)
            loss, grad = nnsurv_loss_and_grad(params, tr_feat[take],
                                              tr_tgt[take], lam)
            if not np.isfinite(loss):
                raise RuntimeError("training loss became non-finite")
            epoch_loss += loss
            vec = opt.step(vec, grad)
        trace.append(epoch_loss)
        params = unpack(params, vec)
        if monitor_val:
            score = _mean_cross_entropy(params, va_feat, va_tgt)
        else:
            score = epoch_loss
        if score < best_score - 1e-10:
            best_score, best_vec, since_best = score, vec.copy(), 0
        else:
            since_best += 1
            # same guard as the partial-likelihood head: the early
            # validation signal is too noisy to act on
            if since_best >= config.patience and epoch >= config.min_epochs:
                break
    return unpack(params, best_vec), np.asarray(trace)


def _select_ridge(features, targets, subject, depth, config: TrainConfig,
                  rng: np.random.Generator) -> float:
    """Subject-level k-fold CV on held-out mean cross-entropy."""
    subjects = np.unique(subject)
    labels_by_subject = rng.permutation(subjects.size) % config.cv_folds
    labels = labels_by_subject[np.searchsorted(subjects, subject)]
    fracs = config.ridge_grid if config.ridge_grid is not None else (1e-5, 1e-4, 1e-3)
    candidates = [frac * features.shape[0] for frac in fracs]
    fold_seeds = rng.integers(2 ** 31, size=config.cv_folds)
    scores = np.zeros(len(candidates))
    for fold in range(config.cv_folds):
        held = labels == fold
        for j, lam in enumerate(candidates):
            params, _ = _train_network(features[~held], targets[~held],
                                       subject[~held], depth, lam, config,
                                       int(fold_seeds[fold]))
            scores[j] += _mean_cross_entropy(params, features[held],
                                             targets[held])
    return float(candidates[int(np.argmin(scores))])


def nnsurv_fit(data: SurvivalDataset, config: TrainConfig | None = None,
               depth: int = 1, n_intervals: int = 20) -> NnsurvFit:
    """Duplicate, standardize (midpoint column included), train.

    ``depth`` 1 is the shallow variant, 2 the deep one.
    """
    if depth not in (1, 2):
        raise ValueError("depth must be 1 or 2")
    config = config or TrainConfig()
    grid = build_time_grid(data, n_intervals)
    batch = duplicate(data, grid)
    feats, mean, scale = standardize_covariates(batch.features)
    rng = np.random.default_rng(config.seed)

    if config.ridge is not None:
        ridge = config.ridge
    else:
        ridge = _select_ridge(feats, batch.targets, batch.subject, depth,
                              config, rng)
    params, trace = _train_network(feats, batch.targets, batch.subject, depth,
                                   ridge, config, int(rng.integers(2 ** 31)))
    return NnsurvFit(params=params, grid=grid, mean=mean, scale=scale,
                     depth=depth, ridge=ridge, loss_trace=trace)


def nnsurv_hazards(fit: NnsurvFit, x) -> np.ndarray:
    """Predicted discrete hazard in every interval for one covariate row."""
    x = np.asarray(x, dtype=np.float64).ravel()
    mids = fit.grid.midpoints
    feats = np.column_stack([np.repeat(x[None, :], mids.size, axis=0), mids])
    z = apply_standardization(feats, fit.mean, fit.scale)
    h, _ = mlp_forward(fit.params, z)
    return np.clip(h[:, 0], HAZARD_CLIP, 1.0 - HAZARD_CLIP)


def nnsurv_survival(fit: NnsurvFit, x) -> SurvivalCurve:
    """S(t_l) = prod_{l' <= l} (1 - h_l'), stepped between the cuts."""
    h = nnsurv_hazards(fit, x)
    probs = np.cumprod(1.0 - h)
    return SurvivalCurve(grid=fit.grid.cuts[1:], probs=probs)

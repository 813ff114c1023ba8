"""Shared data model for right-censored survival data.

Conventions: ``time`` holds observed times in days (event or censoring,
whichever came first), ``event`` is 1 when the event was observed and 0
when censored. All containers are immutable after construction and all
operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SurvivalDataset:
    """Covariate matrix plus observed times and event indicators.

    Parameters
    ----------
    X : ndarray of shape (n, p)
        Real covariates, one row per subject.
    time : ndarray of shape (n,)
        Observed times, strictly positive and finite.
    event : ndarray of shape (n,)
        Event indicators in {0, 1}; 1 means the event was observed.
    """

    X: np.ndarray
    time: np.ndarray
    event: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D matrix")
        time = np.asarray(self.time, dtype=np.float64)
        event = np.asarray(self.event, dtype=np.int64)
        if time.ndim != 1 or event.ndim != 1:
            raise ValueError("time and event must be 1-D")
        if not (X.shape[0] == time.shape[0] == event.shape[0]):
            raise ValueError(
                f"row mismatch: X has {X.shape[0]} rows, time {time.shape[0]}, "
                f"event {event.shape[0]}"
            )
        if not np.all(np.isfinite(time)) or np.any(time <= 0):
            raise ValueError("times must be strictly positive and finite")
        if not np.all((event == 0) | (event == 1)):
            raise ValueError("event values must be 0 or 1")
        for name, arr in (("X", X), ("time", time), ("event", event)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, idx: np.ndarray) -> "SurvivalDataset":
        """Dataset restricted to the given row indices (copying)."""
        idx = np.asarray(idx, dtype=np.intp)
        return SurvivalDataset(self.X[idx].copy(), self.time[idx].copy(),
                               self.event[idx].copy())


@dataclass(frozen=True)
class SurvivalCurve:
    """A survival function S(t) tabulated on an increasing time grid.

    ``probs[k]`` is S(grid[k]); between grid points the curve is a
    right-continuous step function, S(t) = 1 left of the grid and
    S(t) = probs[-1] right of it.
    """

    grid: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if grid.ndim != 1 or probs.ndim != 1 or grid.shape != probs.shape:
            raise ValueError("grid and probs must be 1-D with equal length")
        if grid.size == 0:
            raise ValueError("empty curve")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
            raise ValueError("survival probabilities must lie in [0, 1]")
        if np.any(np.diff(probs) > 1e-12):
            raise ValueError("survival probabilities must be non-increasing")
        probs = np.clip(probs, 0.0, 1.0)
        grid.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "probs", probs)

    def at(self, t) -> np.ndarray:
        """Evaluate S at times ``t`` (scalar or array) by step interpolation."""
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.grid, t, side="right") - 1
        out = np.where(k < 0, 1.0, self.probs[np.clip(k, 0, self.probs.size - 1)])
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class RiskSetIndex:
    """Risk sets R_i = { l : T_l >= T_i } for every subject i.

    ``order`` sorts subjects by ascending observed time; ``sets`` lists,
    for each subject in original numbering, the member indices of R_i.
    """

    sets: tuple
    order: np.ndarray = field(repr=False)

    def members(self, i: int) -> np.ndarray:
        return self.sets[i]

    def size(self, i: int) -> int:
        return self.sets[i].size


@dataclass(frozen=True)
class Split:
    """Train/test index partition, remembering the seed that made it."""

    train: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        train = np.asarray(self.train, dtype=np.intp)
        test = np.asarray(self.test, dtype=np.intp)
        if np.intersect1d(train, test).size:
            raise ValueError("train and test indices overlap")
        train.setflags(write=False)
        test.setflags(write=False)
        object.__setattr__(self, "train", train)
        object.__setattr__(self, "test", test)


def build_risk_sets(data: SurvivalDataset) -> RiskSetIndex:
    """Index the at-risk sets: R_i contains every l with T_l >= T_i.

    Tied observed times put both subjects in each other's risk set.
    """
    time = data.time
    order = np.argsort(time, kind="stable")
    sorted_idx = order  # candidates in ascending time order
    sets = []
    for i in range(data.n):
        # members are the tail of the sorted order from the first l with T_l >= T_i
        start = np.searchsorted(time[sorted_idx], time[i], side="left")
        members = np.sort(sorted_idx[start:])
        members.setflags(write=False)
        sets.append(members)
    return RiskSetIndex(sets=tuple(sets), order=order)


def risk_set_sums(time: np.ndarray, values: np.ndarray) -> np.ndarray:
    """For each subject i, the sum of ``values`` over { l : T_l >= T_i }.

    ``values`` may be (n,) or (n, p); sums come back in subject order.
    Tied times are mutually at risk.
    """
    time = np.asarray(time, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    n = time.shape[0]
    order = np.argsort(-time, kind="stable")
    t_s = time[order]
    cum = np.cumsum(values[order], axis=0)
    group_id = np.concatenate([[0], np.cumsum(np.diff(t_s) != 0)])
    last_of_group = np.concatenate([np.nonzero(np.diff(t_s))[0], [n - 1]])
    sums_sorted = cum[last_of_group[group_id]]
    out = np.empty_like(sums_sorted)
    out[order] = sums_sorted
    return out


def standardize_covariates(X: np.ndarray):
    """Center and scale columns to mean 0 / sample sd 1 (n-1 denominator).

    Constant columns map to all zeros. Returns ``(Z, mean, scale)`` where
    ``scale`` is 1 for constant columns so the stored transform
    ``(X - mean) / scale`` reproduces Z on any data of the same shape.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("X must be a 2-D matrix with at least one column")
    mean = X.mean(axis=0)
    if X.shape[0] > 1:
        sd = X.std(axis=0, ddof=1)
    else:
        sd = np.zeros(X.shape[1])
    scale = np.where(sd > 0, sd, 1.0)
    Z = (X - mean) / scale
    return Z, mean, scale


def apply_standardization(X: np.ndarray, mean: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Apply a stored standardization transform to new rows."""
    X = np.asarray(X, dtype=np.float64)
    return (X - np.asarray(mean)) / np.asarray(scale)


def train_test_split(data: SurvivalDataset, fraction: float, seed: int):
    """Split into train/test parts, stratified on the event indicator.

    ``fraction`` is the train share. Deterministic given ``seed``; the
    censoring proportion of each part differs from the full data by at
    most one subject per stratum.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for value in (0, 1):
        stratum = np.flatnonzero(data.event == value)
        if stratum.size == 0:
            continue
        perm = rng.permutation(stratum)
        n_train = int(round(fraction * stratum.size))
        train_parts.append(perm[:n_train])
        test_parts.append(perm[n_train:])
    train = np.sort(np.concatenate(train_parts)) if train_parts else np.array([], dtype=np.intp)
    test = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], dtype=np.intp)
    if train.size == 0 or test.size == 0:
        raise ValueError(
            f"fraction {fraction} leaves an empty part (n={data.n}: "
            f"{train.size} train / {test.size} test)"
        )
    split = Split(train=train, test=test, seed=seed)
    return data.subset(split.train), data.subset(split.test), split

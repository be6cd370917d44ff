"""Medoid selection and nearest-medoid initialization.

A network initialized from a medoid set classifies exactly like a nearest-
medoid rule under the Chebyshev (L-infinity) distance: with scale k0 the
matching-class logit is k0 - k0 * min over same-class medoids of the
L-infinity distance, and the cross-class biases of the max-plus layer are
low enough (-k0) that they never win for inputs in [0, 1]^P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset
from .errors import DataError, DimensionError, ParameterError
from .network import SCALE_FLOOR, LmmParams

STRATEGIES = ("random", "greedy-kmedoids")


@dataclass
class MedoidSet:
    """Selected training samples acting as per-class cluster centers."""

    vectors: np.ndarray         # (H1, P) in [0, 1]
    labels: np.ndarray          # (H1,) class index per medoid
    source_indices: np.ndarray  # (H1,) rows of the training set

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.source_indices = np.asarray(self.source_indices, dtype=np.int64).reshape(-1)
        if self.vectors.ndim != 2 or self.vectors.shape[0] == 0:
            raise DimensionError("vectors must be a non-empty (H1, P) matrix")
        if self.labels.shape[0] != self.vectors.shape[0] or self.source_indices.shape[0] != self.vectors.shape[0]:
            raise DimensionError("labels and source_indices must match the medoid count")
        if self.vectors.min() < 0.0 or self.vectors.max() > 1.0:
            raise DataError("medoid entries must lie in [0, 1]")
        n_classes = int(self.labels.max()) + 1
        present = np.unique(self.labels)
        if present.size != n_classes or present[0] != 0:
            missing = sorted(set(range(n_classes)) - set(present.tolist()))
            raise DataError(f"every class needs at least one medoid; missing {missing}")

    @property
    def n_medoids(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


def _allocate_per_class(counts: np.ndarray, n_medoids: int) -> np.ndarray:
    """Medoids per class, proportional to class frequency, at least 1 each.

    The remainder after the proportional floor goes to the largest classes
    first (ties by class index).
    """
    n_classes = counts.size
    if n_medoids < n_classes:
        raise ParameterError(f"need at least one medoid per class: {n_medoids} < {n_classes}")
    alloc = np.ones(n_classes, dtype=np.int64)
    spare = n_medoids - n_classes
    extra = (spare * counts) // counts.sum()
    alloc += extra
    left = spare - int(extra.sum())
    order = np.lexsort((np.arange(n_classes), -counts))
    i = 0
    while left > 0:
        alloc[order[i % n_classes]] += 1
        left -= 1
        i += 1
    return alloc


def _greedy_kmedoids(points: np.ndarray, quota: int) -> list[int]:
    """Greedy PAM build step under the Chebyshev distance.

    Repeatedly adds the point minimizing the summed distance from every
    class member to its nearest chosen medoid.  Ties go to the lowest
    index.  Needs O(n^2) memory for the pairwise distance matrix.
    """
    dist = cdist(points, points, "chebyshev")
    nearest = np.full(points.shape[0], np.inf)
    chosen: list[int] = []
    for _ in range(quota):
        costs = np.minimum(dist, nearest[:, None]).sum(axis=0)
        costs[chosen] = np.inf  # never pick the same sample twice
        best = int(np.argmin(costs))
        chosen.append(best)
        nearest = np.minimum(nearest, dist[:, best])
    return chosen


def select_medoids(train: Dataset, n_medoids: int, strategy: str = "greedy-kmedoids",
                   seed: int = 0) -> MedoidSet:
    """Pick ``n_medoids`` training samples to seed the hidden layer.

    Neurons are allotted per class proportionally to class frequency (at
    least one each).  ``random`` draws uniformly without replacement;
    ``greedy-kmedoids`` runs the greedy PAM build step per class.
    """
    if strategy not in STRATEGIES:
        raise ParameterError(f"unknown strategy '{strategy}' (expected one of {STRATEGIES})")
    if n_medoids > train.n_samples:
        raise ParameterError(f"cannot pick {n_medoids} medoids from {train.n_samples} samples")
    n_classes = int(train.labels.max()) + 1
    counts = np.bincount(train.labels, minlength=n_classes)
    if np.any(counts == 0):
        empty = np.nonzero(counts == 0)[0].tolist()
        raise DataError(f"classes {empty} have no training samples")
    alloc = _allocate_per_class(counts, n_medoids)

    rng = np.random.default_rng(seed)
    picked: list[np.ndarray] = []
    for c in range(n_classes):
        members = np.nonzero(train.labels == c)[0]
        quota = int(alloc[c])
        if strategy == "random":
            sel = np.sort(rng.choice(members, size=quota, replace=False))
        else:
            local = _greedy_kmedoids(train.images[members], quota)
            sel = members[local]
        picked.append(sel)
    indices = np.concatenate(picked)
    return MedoidSet(train.images[indices], train.labels[indices], indices)


def init_params(medoids: MedoidSet, k0: float = 1.0) -> LmmParams:
    """Build network weights that classify by nearest medoid.

    All scales are set to k0; the min-plus bias of branch i and neuron h is
    the negated linear image of medoid h, and the max-plus bias is +k0 for
    the medoid's own class and -k0 otherwise.
    """
    if k0 < SCALE_FLOOR:
        raise ParameterError(f"k0 must be >= {SCALE_FLOOR}")
    n_pix = medoids.vectors.shape[1]
    n_hid = medoids.n_medoids
    n_cls = medoids.n_classes
    scales = np.full(2 * n_pix, float(k0))

    lin = np.empty((n_hid, 2 * n_pix))
    lin[:, 0::2] = k0 * medoids.vectors
    lin[:, 1::2] = -k0 * medoids.vectors
    w1 = -lin.T

    w2 = np.full((n_hid, n_cls), -float(k0))
    w2[np.arange(n_hid), medoids.labels] = float(k0)
    return LmmParams(scales, w1, w2, temperature=1.0)


def nearest_medoid_predict(medoids: MedoidSet, x) -> int:
    """Class of the L-infinity-nearest medoid (lowest index on ties)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (medoids.vectors.shape[1],):
        raise DimensionError(f"expected input of length {medoids.vectors.shape[1]}, got shape {x.shape}")
    dist = np.max(np.abs(medoids.vectors - x[None, :]), axis=1)
    return int(medoids.labels[int(np.argmin(dist))])

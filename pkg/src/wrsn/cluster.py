"""PAM k-medoids over path dissimilarities and per-cluster representative picks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def _pair_signs(path: np.ndarray) -> np.ndarray:
    pos = np.empty(path.size, dtype=np.int64)
    pos[path - 1] = np.arange(path.size)
    iu, ju = np.triu_indices(path.size, k=1)
    return np.where(pos[iu] < pos[ju], 1.0, -1.0)


def distance_matrix(population: Sequence[np.ndarray]) -> np.ndarray:
    """d(P, Q) = 1 - concordant_pairs(P, Q) / (n(n-1)/2).

    With s_P the +/-1 order sign of every sensor pair, the concordant count
    is (s_P . s_Q + pairs) / 2, so the whole matrix is one product.
    """
    pop = [np.asarray(p, dtype=np.int64) for p in population]
    if not pop:
        return np.zeros((0, 0))
    n = pop[0].size
    ref = np.arange(1, n + 1)
    for p in pop:
        if p.size != n or not np.array_equal(np.sort(p), ref):
            raise ValueError("all paths must be permutations of the same id set 1..n")
    pairs = n * (n - 1) // 2
    if pairs == 0:
        return np.zeros((len(pop), len(pop)))
    S = np.stack([_pair_signs(p) for p in pop])
    concordant = (S @ S.T + pairs) / 2
    D = 1.0 - concordant / pairs
    np.fill_diagonal(D, 0.0)
    return np.clip(D, 0.0, 1.0)


@dataclass
class PamResult:
    medoids: np.ndarray  # population indices
    labels: np.ndarray  # cluster label (index into medoids) per point
    cost: float


def _assign(D: np.ndarray, medoids: np.ndarray) -> tuple[np.ndarray, float]:
    sub = D[:, medoids]
    labels = np.argmin(sub, axis=1)
    labels[medoids] = np.arange(medoids.size)
    return labels, float(sub[np.arange(D.shape[0]), labels].sum())


def pam(D, k: int, rng=None, max_iter: int = 1000) -> PamResult:
    """Classic BUILD + SWAP.  Deterministic; ties go to the lowest index.

    ``rng`` is accepted for interface symmetry and unused.
    """
    D = np.asarray(D, dtype=float)
    N = D.shape[0]
    if not 1 <= k <= N:
        raise ValueError(f"k must lie in [1, {N}], got {k}")
    # BUILD
    first = int(np.argmin(D.sum(axis=1)))
    medoids = [first]
    nearest = D[:, first].copy()
    while len(medoids) < k:
        gains = np.maximum(nearest[:, None] - D, 0.0).sum(axis=0)
        gains[medoids] = -np.inf
        c = int(np.argmax(gains))
        medoids.append(c)
        nearest = np.minimum(nearest, D[:, c])
    medoids = np.array(medoids)
    labels, cost = _assign(D, medoids)
    # SWAP: best single (medoid, non-medoid) exchange per pass
    for _ in range(max_iter):
        best = (cost, -1, -1)
        is_med = np.zeros(N, dtype=bool)
        is_med[medoids] = True
        for mi in range(k):
            rest = np.delete(medoids, mi)
            base = D[:, rest].min(axis=1) if rest.size else np.full(N, np.inf)
            cand = np.flatnonzero(~is_med)
            if cand.size == 0:
                continue
            costs = np.minimum(base[:, None], D[:, cand]).sum(axis=0)
            j = int(np.argmin(costs))
            if costs[j] < best[0] - 1e-12:
                best = (float(costs[j]), mi, int(cand[j]))
        if best[1] < 0:
            break
        medoids = medoids.copy()
        medoids[best[1]] = best[2]
        labels, cost = _assign(D, medoids)
    return PamResult(medoids, labels, cost)


def representatives(fitness, labels, k: int | None = None) -> np.ndarray:
    """Index of the lowest-fitness member of each cluster (ties: lowest index)."""
    fitness = np.asarray(fitness, dtype=float)
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if k is None else k
    reps = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            raise RuntimeError(f"cluster {c} is empty")
        reps.append(int(members[np.argmin(fitness[members])]))
    return np.array(reps)

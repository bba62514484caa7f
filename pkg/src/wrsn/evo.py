"""Permutation and real-coded variation operators, selection and time decoding.

Real-coded operators work on arrays of shape (..., n) so a whole offspring
batch can be produced in one call.
"""
from __future__ import annotations

import numpy as np

from .evaluation import ChargingSchedule, Evaluator, as_path
from .model import NetworkInstance


def pmx_crossover(parent1, parent2, rng=None, cuts: tuple[int, int] | None = None):
    """Partially mapped crossover; ``cuts=(a, b)`` selects slice ``[a:b]``."""
    p1 = np.asarray(parent1, dtype=np.int64)
    p2 = np.asarray(parent2, dtype=np.int64)
    n = p1.size
    if cuts is None:
        rng = np.random.default_rng(rng)
        a, b = sorted(rng.choice(n + 1, size=2, replace=False)) if n > 0 else (0, 0)
    else:
        a, b = cuts
    return _pmx_child(p1, p2, a, b), _pmx_child(p2, p1, a, b)


def _pmx_child(donor: np.ndarray, other: np.ndarray, a: int, b: int) -> np.ndarray:
    child = other.copy()
    child[a:b] = donor[a:b]
    where_in_donor = {int(v): k for k, v in enumerate(donor)}
    segment = set(donor[a:b].tolist())
    for i in list(range(a)) + list(range(b, donor.size)):
        v = int(other[i])
        while v in segment:
            v = int(other[where_in_donor[v]])
        child[i] = v
    return child


def swap_mutation(path, rate: float = 0.05, rng=None) -> np.ndarray:
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    out = np.array(path, dtype=np.int64)
    if out.size >= 2 and rng.random() < rate:
        i, j = rng.choice(out.size, size=2, replace=False)
        out[i], out[j] = out[j], out[i]
    return out


def sbx_crossover(x, y, eta: float = 2.0, rate: float = 0.9, rng=None):
    """Simulated binary crossover on [0, 1] genes, clamped.

    ``rate`` is the per-pair application probability; within a crossed pair
    each gene is recombined with probability 1/2.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    rng = np.random.default_rng(rng)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = rng.random(x.shape)
    beta = np.where(u <= 0.5, (2 * u) ** (1 / (eta + 1)), (1 / (2 * (1 - u))) ** (1 / (eta + 1)))
    pair = rng.random(x.shape[:-1] + (1,)) < rate
    gene = (rng.random(x.shape) < 0.5) & pair & (np.abs(x - y) > 1e-14)
    c1 = np.where(gene, 0.5 * ((1 + beta) * x + (1 - beta) * y), x)
    c2 = np.where(gene, 0.5 * ((1 - beta) * x + (1 + beta) * y), y)
    return np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)


def poly_mutation(x, eta: float = 5.0, rate: float = 0.05, rng=None) -> np.ndarray:
    """Bounded polynomial mutation on [0, 1], applied per gene with probability ``rate``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    rng = np.random.default_rng(rng)
    x = np.asarray(x, dtype=float)
    hit = rng.random(x.shape) < rate
    u = rng.random(x.shape)
    power = 1.0 / (eta + 1)
    lo = 2 * u + (1 - 2 * u) * (1 - x) ** (eta + 1)
    hi = 2 * (1 - u) + 2 * (u - 0.5) * x ** (eta + 1)
    dq = np.where(u <= 0.5, lo ** power - 1, 1 - hi ** power)
    return np.clip(np.where(hit, x + dq, x), 0.0, 1.0)


def tournament_select(fitness, rng=None, arity: int = 2, size: int | None = None):
    """Index (or ``size`` indices) of the lowest-f among ``arity`` uniform draws."""
    rng = np.random.default_rng(rng)
    fitness = np.asarray(fitness, dtype=float)
    if fitness.size == 0:
        raise ValueError("empty population")
    shape = (1 if size is None else size, arity)
    draws = rng.integers(fitness.size, size=shape)
    best = draws[np.arange(shape[0]), np.argmin(fitness[draws], axis=1)]
    return int(best[0]) if size is None else best


def pm_rate(mutation_rate: float, n: int) -> float:
    return max(mutation_rate, 1.0 / n)


def decode_times(rho, path, instance: NetworkInstance, evaluator: Evaluator | None = None) -> ChargingSchedule:
    """Turn charging-time ratios (by path position) into dwell times."""
    path = as_path(path, instance.n)
    ev = evaluator or Evaluator(instance)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != path.shape:
        raise ValueError("chromosome length must match the path")
    T_charge = ev.budget(float(ev.legs(path).sum()))
    return ChargingSchedule(path, ev.allocate(path, rho, T_charge))


def decode_batch(rhos: np.ndarray, path: np.ndarray, ev: Evaluator, T_charge: float) -> np.ndarray:
    return ev.allocate(path, rhos, T_charge)


def greedy_chromosome(path: np.ndarray, ev: Evaluator) -> np.ndarray:
    """Ratios in [0, 1] that decode back to the greedy time split."""
    w = ev.share[path - 1]
    top = w.max()
    return w / top if top > 0 else np.full(path.size, 0.5)

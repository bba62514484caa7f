"""Seeded instance generation for uniform, normal and grid deployments."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .evaluation import Evaluator
from .model import ChargerConfig, NetworkInstance, RadioParams, SensorNode, energy_rx, energy_tx
from .pathops import nearest_neighbor_tour

DISTRIBUTIONS = {"uniform": "r", "normal": "n", "grid": "g"}


class InstanceGenerationError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    distribution: str = "uniform"
    n: int = 50
    seed: int = 1
    field_width: float = 500.0
    charger: ChargerConfig = field(default_factory=ChargerConfig)
    e_max: float = 10800.0
    e_min: float = 540.0
    e_init_frac: tuple[float, float] = (0.3, 1.0)
    p_policy: str = "uniform"  # "uniform" | "routing"
    p_range: tuple[float, float] = (0.8, 2.0)
    T_policy: str | float = "round"  # "round" | "budget" | explicit seconds
    alpha: float = 0.5
    sigma_frac: float = 1 / 6
    comm_range: float | None = None  # default field_width / 5
    packet_bits: float = 1.0
    packet_rate: float = 0.01

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.p_policy not in ("uniform", "routing"):
            raise ValueError(f"unknown p_policy {self.p_policy!r}")
        if isinstance(self.T_policy, str) and self.T_policy not in ("round", "budget"):
            raise ValueError(f"unknown T_policy {self.T_policy!r}")
        lo, hi = self.e_init_frac
        if not (0 <= lo <= hi <= 1):
            raise ValueError("e_init_frac must satisfy 0 <= lo <= hi <= 1")
        if self.field_width <= 0:
            raise ValueError("field_width must be positive")

    @property
    def name(self) -> str:
        return f"{DISTRIBUTIONS[self.distribution]}_{self.n}_{self.seed}"


def _coordinates(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    W, n = spec.field_width, spec.n
    if spec.distribution == "uniform":
        return rng.uniform(0.0, W, size=(n, 2))
    if spec.distribution == "normal":
        pts = np.empty((n, 2))
        sigma = W * spec.sigma_frac
        for i in range(n):
            while True:
                xy = rng.normal(W / 2, sigma, size=2)
                if 0 <= xy[0] <= W and 0 <= xy[1] <= W:
                    break
            pts[i] = xy
        return pts
    side = W / 10
    cells = np.arange(n) % 100  # row-major, wraps past 100 sensors
    row, col = np.divmod(cells, 10)
    offset = rng.uniform(0.0, side, size=(n, 2))
    return np.column_stack((col * side, row * side)) + offset


def routing_rates(coords: np.ndarray, base: tuple[float, float], comm_range: float,
                  l: float, rate: float, params: RadioParams = RadioParams(),
                  clamp: tuple[float, float] | None = None) -> np.ndarray:
    """Per-sensor consumption from a min-hop routing tree rooted at the base.

    Ties between equal-hop parents go to the shorter link.  Each sensor pays
    its own transmission plus one receive per descendant whose traffic it
    relays.
    """
    pts = np.vstack([np.asarray(base, dtype=float)[None, :], coords])
    m = pts.shape[0]
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    adj = d <= comm_range
    hop = np.full(m, -1)
    hop[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for w in np.flatnonzero(adj[u] & (hop < 0)):
                hop[w] = hop[u] + 1
                nxt.append(int(w))
        frontier = nxt
    dead = np.flatnonzero(hop[1:] < 0)
    if dead.size:
        raise InstanceGenerationError(f"sensor {int(dead[0]) + 1} cannot reach the base station")
    parent = np.zeros(m, dtype=int)
    for w in range(1, m):
        cand = np.flatnonzero(adj[w] & (hop == hop[w] - 1))
        parent[w] = cand[np.lexsort((cand, d[w, cand]))[0]]
    descendants = np.zeros(m, dtype=int)
    for w in sorted(range(1, m), key=lambda k: -hop[k]):
        if parent[w] != 0:
            descendants[parent[w]] += descendants[w] + 1
    p = np.array([rate * (energy_tx(l, d[w, parent[w]], params) + energy_rx(l, params) * descendants[w])
                  for w in range(1, m)])
    if clamp is not None:
        p = np.clip(p, *clamp)
    return p


def derive_consumption_rates(instance: NetworkInstance, l: float = 1.0, rate: float = 1.0,
                             params: RadioParams = RadioParams(), comm_range: float | None = None,
                             clamp: tuple[float, float] | None = None) -> np.ndarray:
    comm = instance.field_width / 5 if comm_range is None else comm_range
    return routing_rates(instance.coords[1:], instance.base, comm, l, rate, params, clamp)


def round_period(instance: NetworkInstance) -> float:
    """One charger round on the nearest-neighbour tour: travel plus its full dwell budget."""
    ev = Evaluator(instance)
    T_travel = float(ev.legs(nearest_neighbor_tour(instance)).sum())
    return max(T_travel + ev.budget(T_travel, period_cap=False), 1.0)


def budget_period(instance: NetworkInstance) -> float:
    ev = Evaluator(instance)
    T_travel = float(ev.legs(nearest_neighbor_tour(instance)).sum())
    return max(T_travel + instance.charger.E_MC / instance.charger.U, 1.0)


def resolve_period(instance: NetworkInstance, policy: str | float) -> NetworkInstance:
    if isinstance(policy, (int, float)):
        T = float(policy)
    elif policy == "round":
        T = round_period(instance)
    else:
        T = budget_period(instance)
    return replace(instance, T=T)


def generate_instance(spec: GeneratorSpec) -> NetworkInstance:
    dist_code = list(DISTRIBUTIONS).index(spec.distribution)
    rng = np.random.default_rng([spec.seed, dist_code, spec.n])
    xy = _coordinates(spec, rng)
    lo, hi = spec.e_init_frac
    e_init = rng.uniform(lo, hi, size=spec.n) * spec.e_max
    e_init = np.clip(e_init, spec.e_min, spec.e_max)
    W = spec.field_width
    base = (W / 2, W / 2)
    if spec.p_policy == "uniform":
        p = rng.uniform(*spec.p_range, size=spec.n)
    else:
        comm = W / 5 if spec.comm_range is None else spec.comm_range
        p = routing_rates(xy, base, comm, spec.packet_bits, spec.packet_rate, clamp=spec.p_range)
    sensors = tuple(
        SensorNode(i + 1, float(xy[i, 0]), float(xy[i, 1]), float(e_init[i]), float(p[i]), spec.e_max, spec.e_min)
        for i in range(spec.n)
    )
    inst = NetworkInstance(W, base, sensors, spec.charger, T=1.0, alpha=spec.alpha, name=spec.name)
    return resolve_period(inst, spec.T_policy)


def benchmark_suite(sizes=(25, 50, 75, 100), ords=range(1, 11), **overrides) -> list[NetworkInstance]:
    """Every ``Type_Num_Ord`` instance: 3 distributions x sizes x orders."""
    return [generate_instance(GeneratorSpec(distribution=d, n=n, seed=o, **overrides))
            for d in DISTRIBUTIONS for n in sizes for o in ords]


def truncate(instance: NetworkInstance, n: int, policy: str | float = "round") -> NetworkInstance:
    """First ``n`` sensors of an instance, with the period recomputed."""
    if not 1 <= n <= instance.n:
        raise ValueError(f"cannot keep {n} of {instance.n} sensors")
    sub = replace(instance, sensors=instance.sensors[:n], name=instance.name)
    return resolve_period(sub, policy)

"""Domain types, the first-order radio energy model and file I/O.

Sensors are stored in id order, so ``sensors[k].id == k + 1``; every array
exposed by :class:`NetworkInstance` is indexed by ``id - 1``.  Charging
paths are integer arrays of sensor ids; the base station (id 0) is implicit
at both ends of the tour.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace, asdict
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1

RESULT_COLUMNS = (
    "instance",
    "algorithm",
    "seed",
    "evals_path",
    "evals_time",
    "dead_ratio",
    "objective",
    "runtime_s",
)


class SchemaError(ValueError):
    """Malformed instance, schedule or results file."""


@dataclass(frozen=True)
class RadioParams:
    eps_elec: float = 0.05  # J/bit
    eps_fc: float = 0.01  # J/bit/m^2
    eps_mp: float = 0.013e-12  # J/bit/m^4

    def __post_init__(self):
        if min(self.eps_elec, self.eps_fc, self.eps_mp) <= 0:
            raise ValueError("radio parameters must be strictly positive")

    @property
    def d0(self) -> float:
        return math.sqrt(self.eps_fc / self.eps_mp)


def energy_rx(l: float, params: RadioParams = RadioParams()) -> float:
    """Energy (J) spent receiving ``l`` bits."""
    if l < 0:
        raise ValueError(f"payload must be non-negative, got {l}")
    return l * params.eps_elec


def energy_tx(l: float, d: float, params: RadioParams = RadioParams()) -> float:
    """Energy (J) spent transmitting ``l`` bits over ``d`` meters.

    Free-space amplifier below the crossover distance ``d0``, multi-path
    above it.
    """
    if l < 0 or d < 0:
        raise ValueError(f"payload and distance must be non-negative, got l={l}, d={d}")
    if d < params.d0:
        return l * params.eps_elec + l * params.eps_fc * d**2
    return l * params.eps_elec + l * params.eps_mp * d**4


@dataclass(frozen=True)
class SensorNode:
    id: int
    x: float
    y: float
    e_init: float
    p: float
    e_max: float = 10800.0
    e_min: float = 540.0

    def __post_init__(self):
        if not (0 <= self.e_min < self.e_max):
            raise ValueError(f"sensor {self.id}: need 0 <= e_min < e_max")
        if not (self.e_min <= self.e_init <= self.e_max):
            raise ValueError(f"sensor {self.id}: e_init={self.e_init} outside [e_min, e_max]")
        if not self.p > 0:
            raise ValueError(f"sensor {self.id}: consumption rate must be positive")


@dataclass(frozen=True)
class ChargerConfig:
    E_MC: float = 108000.0
    U: float = 5.0
    P_M: float = 1.0
    v: float = 5.0

    def __post_init__(self):
        for name in ("E_MC", "U", "P_M", "v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"charger.{name} must be strictly positive")


@dataclass(frozen=True)
class NetworkInstance:
    field_width: float
    base: tuple[float, float]
    sensors: tuple[SensorNode, ...]
    charger: ChargerConfig
    T: float
    alpha: float = 0.5
    name: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        object.__setattr__(self, "base", (float(self.base[0]), float(self.base[1])))
        if len(self.sensors) < 1:
            raise ValueError("an instance needs at least one sensor")
        ids = [s.id for s in self.sensors]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("sensor ids must be 1..n in order")
        if not self.T > 0:
            raise ValueError("cycle period T must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        W = self.field_width
        for s in self.sensors:
            if not (0 <= s.x <= W and 0 <= s.y <= W):
                raise ValueError(f"sensor {s.id} lies outside the {W} m field")

    @property
    def n(self) -> int:
        return len(self.sensors)

    @cached_property
    def coords(self) -> np.ndarray:
        """(n+1, 2) coordinates; row 0 is the base station."""
        xy = [self.base] + [(s.x, s.y) for s in self.sensors]
        return np.asarray(xy, dtype=float)

    @cached_property
    def dist(self) -> np.ndarray:
        d = self.coords[:, None, :] - self.coords[None, :, :]
        return np.sqrt((d**2).sum(axis=-1))

    @cached_property
    def p(self) -> np.ndarray:
        return np.array([s.p for s in self.sensors])

    @cached_property
    def e_init(self) -> np.ndarray:
        return np.array([s.e_init for s in self.sensors])

    @cached_property
    def e_max(self) -> np.ndarray:
        return np.array([s.e_max for s in self.sensors])

    @cached_property
    def e_min(self) -> np.ndarray:
        return np.array([s.e_min for s in self.sensors])

    def with_charger(self, **changes) -> "NetworkInstance":
        return replace(self, charger=replace(self.charger, **changes))

    def with_mean_rate(self, mean_p: float) -> "NetworkInstance":
        """Copy with every consumption rate scaled so their mean is ``mean_p``."""
        scale = mean_p / float(self.p.mean())
        sensors = tuple(replace(s, p=s.p * scale) for s in self.sensors)
        return replace(self, sensors=sensors)


# -- serialization -----------------------------------------------------------

def instance_to_dict(inst: NetworkInstance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "field_width": inst.field_width,
        "base": {"x": inst.base[0], "y": inst.base[1]},
        "T": inst.T,
        "alpha": inst.alpha,
        "charger": asdict(inst.charger),
        "sensors": [asdict(s) for s in inst.sensors],
    }


def _require(obj: dict, key: str, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field '{key}'")
    return obj[key]


def instance_from_dict(data: dict, where: str = "instance") -> NetworkInstance:
    version = _require(data, "schema_version", where)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported schema_version {version!r}")
    base = _require(data, "base", where)
    charger = _require(data, "charger", where)
    raw_sensors = _require(data, "sensors", where)
    try:
        ch = ChargerConfig(**{k: float(_require(charger, k, f"{where}.charger"))
                              for k in ("E_MC", "U", "P_M", "v")})
        sensors = []
        for i, s in enumerate(raw_sensors):
            loc = f"{where}.sensors[{i}]"
            sensors.append(SensorNode(
                id=int(_require(s, "id", loc)),
                **{k: float(_require(s, k, loc)) for k in ("x", "y", "e_init", "p", "e_max", "e_min")},
            ))
        return NetworkInstance(
            field_width=float(_require(data, "field_width", where)),
            base=(float(_require(base, "x", f"{where}.base")), float(_require(base, "y", f"{where}.base"))),
            sensors=tuple(sensors),
            charger=ch,
            T=float(_require(data, "T", where)),
            alpha=float(data.get("alpha", 0.5)),
            name=str(data.get("name", "instance")),
        )
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _read_json(path: Path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def save_instance(inst: NetworkInstance, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")
    return path


def load_instance(path) -> NetworkInstance:
    return instance_from_dict(_read_json(path), where=str(path))


def save_schedule(path_ids: Sequence[int], times: Sequence[float], out, instance_name: str = "") -> Path:
    out = Path(out)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "instance": instance_name,
        "path": [int(i) for i in path_ids],
        "times": [float(t) for t in times],
    }
    out.write_text(json.dumps(doc, indent=2) + "\n")
    return out


def load_schedule(path) -> tuple[np.ndarray, np.ndarray]:
    doc = _read_json(path)
    where = str(path)
    if _require(doc, "schema_version", where) != SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported schema_version")
    ids = np.asarray(_require(doc, "path", where), dtype=int)
    times = np.asarray(_require(doc, "times", where), dtype=float)
    if ids.shape != times.shape:
        raise SchemaError(f"{where}: 'path' and 'times' lengths differ")
    return ids, times


# -- results CSV -------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    instance: str
    algorithm: str
    seed: int
    evals_path: int
    evals_time: int
    dead_ratio: float  # percent
    objective: float
    runtime_s: float

    def as_strings(self) -> list[str]:
        return [
            self.instance,
            self.algorithm,
            str(self.seed),
            str(self.evals_path),
            str(self.evals_time),
            f"{self.dead_ratio:.2f}",
            f"{self.objective:.12g}",
            f"{self.runtime_s:.3f}",
        ]


def write_results(rows: Iterable[ResultRow], path, append: bool = False) -> Path:
    path = Path(path)
    new_file = not append or not path.exists() or path.stat().st_size == 0
    with path.open("a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new_file:
            w.writerow(RESULT_COLUMNS)
        for row in rows:
            w.writerow(row.as_strings())
    return path


def read_results(path) -> list[ResultRow]:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULT_COLUMNS:
            raise SchemaError(f"{path}: line 1: expected header {','.join(RESULT_COLUMNS)}")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(RESULT_COLUMNS):
                raise SchemaError(f"{path}: line {lineno}: expected {len(RESULT_COLUMNS)} fields")
            try:
                rows.append(ResultRow(rec[0], rec[1], int(rec[2]), int(rec[3]), int(rec[4]),
                                      float(rec[5]), float(rec[6]), float(rec[7])))
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from exc
    return rows

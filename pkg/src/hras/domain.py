"""Problem data for single-operator home-service routing and appointment scheduling.

Indexing conventions used throughout the package:

* customers are 1..N in docs and names, 0..N-1 in arrays;
* travel matrices are (N+1)x(N+1) with row/column 0 the depot, diagonal ignored;
* the appointment of the virtual position N+1 is fixed to the horizon ``L``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class StructureError(ValueError):
    """Input arrays do not have the shape or structure an operation needs."""


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CostStructure:
    wait: np.ndarray  # c^w_j, per position
    idle: np.ndarray  # c^u_j, per position
    overtime: float
    travel: float  # lambda

    def __post_init__(self):
        object.__setattr__(self, "wait", _frozen(self.wait))
        object.__setattr__(self, "idle", _frozen(self.idle))
        object.__setattr__(self, "overtime", float(self.overtime))
        object.__setattr__(self, "travel", float(self.travel))

    @classmethod
    def uniform(cls, n: int, wait: float, idle: float, overtime: float, travel: float) -> "CostStructure":
        return cls(np.full(n, wait), np.full(n, idle), overtime, travel)

    @property
    def n(self) -> int:
        return len(self.wait)

    def violations(self) -> list[str]:
        out = []
        for name, arr in (("waitCost", self.wait), ("idleCost", self.idle)):
            for j in np.flatnonzero(arr < 0):
                out.append(f"costs.{name}[{j}] < 0")
        if self.overtime < 0:
            out.append("costs.overtimeCost < 0")
        if self.travel < 0:
            out.append("costs.travelCost < 0")
        return out

    def to_dict(self) -> dict:
        return {
            "waitCost": self.wait.tolist(),
            "idleCost": self.idle.tolist(),
            "overtimeCost": self.overtime,
            "travelCost": self.travel,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CostStructure":
        return cls(d["waitCost"], d["idleCost"], d["overtimeCost"], d["travelCost"])


@dataclass(frozen=True)
class Instance:
    N: int
    L: float
    costs: CostStructure
    serviceLower: np.ndarray
    serviceUpper: np.ndarray
    travelLower: np.ndarray
    travelUpper: np.ndarray
    serviceMean: Optional[np.ndarray] = None
    travelMean: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("serviceLower", "serviceUpper", "travelLower", "travelUpper",
                     "serviceMean", "travelMean"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _frozen(val))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def deltas(self) -> "SupportDeltas":
        return SupportDeltas(self.serviceUpper - self.serviceLower,
                             self.travelUpper - self.travelLower)

    def with_means(self, serviceMean, travelMean) -> "Instance":
        return Instance(self.N, self.L, self.costs, self.serviceLower, self.serviceUpper,
                        self.travelLower, self.travelUpper, serviceMean, travelMean)

    def with_costs(self, costs: CostStructure) -> "Instance":
        return Instance(self.N, self.L, costs, self.serviceLower, self.serviceUpper,
                        self.travelLower, self.travelUpper, self.serviceMean, self.travelMean)

    def with_support(self, serviceLower, serviceUpper, travelLower, travelUpper) -> "Instance":
        return Instance(self.N, self.L, self.costs, serviceLower, serviceUpper,
                        travelLower, travelUpper, None, None)

    def to_dict(self) -> dict:
        d = {
            "N": self.N,
            "L": self.L,
            "costs": self.costs.to_dict(),
            "serviceLower": self.serviceLower.tolist(),
            "serviceUpper": self.serviceUpper.tolist(),
            "travelLower": self.travelLower.tolist(),
            "travelUpper": self.travelUpper.tolist(),
        }
        if self.serviceMean is not None:
            d["serviceMean"] = self.serviceMean.tolist()
        if self.travelMean is not None:
            d["travelMean"] = self.travelMean.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        return cls(
            N=d["N"], L=d["L"], costs=CostStructure.from_dict(d["costs"]),
            serviceLower=d["serviceLower"], serviceUpper=d["serviceUpper"],
            travelLower=d["travelLower"], travelUpper=d["travelUpper"],
            serviceMean=d.get("serviceMean"), travelMean=d.get("travelMean"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Scenario:
    """One joint realization of service times (length N) and travel times."""

    service: np.ndarray
    travel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "service", _frozen(self.service))
        object.__setattr__(self, "travel", _frozen(self.travel))

    @property
    def N(self) -> int:
        return len(self.service)

    def violations(self, inst: Optional[Instance] = None, tol: float = 1e-9) -> list[str]:
        out = []
        n = self.N
        if self.travel.shape != (n + 1, n + 1):
            return [f"travel shape {self.travel.shape} != {(n + 1, n + 1)}"]
        off = ~np.eye(n + 1, dtype=bool)
        if np.any(self.service < 0):
            out.append("service has negative entries")
        if np.any(self.travel[off] < 0):
            out.append("travel has negative entries")
        if inst is not None:
            if inst.N != n:
                return out + [f"scenario N={n} != instance N={inst.N}"]
            for i in np.flatnonzero((self.service < inst.serviceLower - tol)
                                    | (self.service > inst.serviceUpper + tol)):
                out.append(f"service[{i}] outside support")
            bad = off & ((self.travel < inst.travelLower - tol) | (self.travel > inst.travelUpper + tol))
            for i, k in zip(*np.nonzero(bad)):
                out.append(f"travel[{i}][{k}] outside support")
        return out

    def to_dict(self) -> dict:
        return {"service": self.service.tolist(), "travel": self.travel.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(d["service"], d["travel"])


@dataclass(frozen=True)
class SupportDeltas:
    deltaService: np.ndarray
    deltaTravel: np.ndarray


@dataclass(frozen=True)
class FirstStageDecision:
    assignment: np.ndarray  # x[i, j] = 1 iff customer i is served at position j
    appointments: np.ndarray  # a_j

    def __post_init__(self):
        object.__setattr__(self, "assignment", _frozen(np.rint(self.assignment), dtype=int))
        object.__setattr__(self, "appointments", _frozen(self.appointments))

    @property
    def N(self) -> int:
        return len(self.appointments)

    @classmethod
    def from_route(cls, route: Sequence[int], appointments) -> "FirstStageDecision":
        """Build a decision from a 1-based route ``(i_1, ..., i_N)``."""
        return cls(route_to_matrix(route), appointments)

    def route(self) -> tuple[int, ...]:
        return route_of(self)

    def violations(self, L: Optional[float] = None, tol: float = 1e-7) -> list[str]:
        out = []
        x = self.assignment
        n = len(self.appointments)
        if x.shape != (n, n):
            return [f"assignment shape {x.shape} != {(n, n)}"]
        if not np.all((x == 0) | (x == 1)):
            out.append("assignment is not binary")
        if np.any(x.sum(axis=0) != 1) or np.any(x.sum(axis=1) != 1):
            out.append("assignment is not a permutation matrix")
        a = self.appointments
        if np.any(a < -tol):
            out.append("negative appointment")
        if L is not None and np.any(a > L + tol):
            out.append("appointment beyond horizon")
        if np.any(np.diff(a) < -tol):
            out.append("appointments not nondecreasing")
        return out

    def to_dict(self) -> dict:
        return {"assignment": self.assignment.tolist(), "appointments": self.appointments.tolist(),
                "route": list(route_of(self))}

    @classmethod
    def from_dict(cls, d: dict) -> "FirstStageDecision":
        return cls(d["assignment"], d["appointments"])


def route_to_matrix(route: Sequence[int]) -> np.ndarray:
    n = len(route)
    if sorted(route) != list(range(1, n + 1)):
        raise StructureError(f"route {tuple(route)} is not a permutation of 1..{n}")
    x = np.zeros((n, n), dtype=int)
    for j, i in enumerate(route):
        x[i - 1, j] = 1
    return x


def route_of(dec) -> tuple[int, ...]:
    """Return the 1-based route ``(i_1, ..., i_N)`` with ``x[i_j, j] = 1``.

    Accepts a :class:`FirstStageDecision` or a bare assignment matrix.
    """
    x = np.asarray(dec.assignment if isinstance(dec, FirstStageDecision) else dec)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise StructureError(f"assignment must be square, got shape {x.shape}")
    if (not np.all((x == 0) | (x == 1)) or np.any(x.sum(axis=0) != 1)
            or np.any(x.sum(axis=1) != 1)):
        raise StructureError("assignment is not a permutation matrix")
    return tuple(int(i) + 1 for i in np.argmax(x, axis=0))


def validate_instance(inst: Instance) -> list[str]:
    """List every violated Instance invariant; an empty list means valid."""
    out: list[str] = []
    n = inst.N
    if n < 1:
        return [f"N={n} < 1"]
    if not inst.L > 0:
        out.append(f"L={inst.L} must be > 0")
    if inst.costs.n != n:
        out.append(f"costs length {inst.costs.n} != N")
    out.extend(inst.costs.violations())
    for name, shape in (("serviceLower", (n,)), ("serviceUpper", (n,)),
                        ("travelLower", (n + 1, n + 1)), ("travelUpper", (n + 1, n + 1))):
        if getattr(inst, name).shape != shape:
            out.append(f"{name} shape {getattr(inst, name).shape} != {shape}")
    if out and any("shape" in v for v in out):
        return out
    off = ~np.eye(n + 1, dtype=bool)

    for i in np.flatnonzero(inst.serviceLower < 0):
        out.append(f"serviceLower[{i}] < 0")
    for i in np.flatnonzero(inst.serviceLower > inst.serviceUpper):
        out.append(f"serviceLower[{i}] > serviceUpper[{i}]")
    for i, k in zip(*np.nonzero(off & (inst.travelLower < 0))):
        out.append(f"travelLower[{i}][{k}] < 0")
    for i, k in zip(*np.nonzero(off & (inst.travelLower > inst.travelUpper))):
        out.append(f"travelLower[{i}][{k}] > travelUpper[{i}][{k}]")

    if inst.serviceMean is not None:
        m = inst.serviceMean
        if m.shape != (n,):
            out.append(f"serviceMean shape {m.shape} != {(n,)}")
        else:
            for i in np.flatnonzero((m < inst.serviceLower) | (m > inst.serviceUpper)):
                out.append(f"serviceMean[{i}] outside [serviceLower, serviceUpper]")
    if inst.travelMean is not None:
        m = inst.travelMean
        if m.shape != (n + 1, n + 1):
            out.append(f"travelMean shape {m.shape} != {(n + 1, n + 1)}")
        else:
            bad = off & ((m < inst.travelLower) | (m > inst.travelUpper))
            for i, k in zip(*np.nonzero(bad)):
                out.append(f"travelMean[{i}][{k}] outside [travelLower, travelUpper]")
    return out


def arcs(route: Sequence[int]) -> list[tuple[int, int]]:
    """Travel arcs (depot = 0) traversed by a 1-based route, in order."""
    nodes = [0, *route, 0]
    return list(zip(nodes[:-1], nodes[1:]))


def save_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj.to_dict() if hasattr(obj, "to_dict") else obj, fh, indent=2)
        fh.write("\n")


def load_json(path):
    with open(path) as fh:
        return json.load(fh)

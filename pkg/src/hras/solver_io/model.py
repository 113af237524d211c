"""Solver-agnostic MILP container.

Variables and constraints keep insertion order, which is also the order used
when the model is emitted to a file or handed to a backend.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np
import scipy.sparse as sp

CONTINUOUS = "continuous"
BINARY = "binary"

LE, GE, EQ = "<=", ">=", "="
_SENSES = (LE, GE, EQ)

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]{0,254}")

Number = Union[int, float]


class ModelError(ValueError):
    pass


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + constant`` over variable indices."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Optional[Mapping[int, float]] = None, constant: float = 0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    def add(self, var: int, coef: Number = 1.0) -> "LinExpr":
        if coef:
            self.terms[var] = self.terms.get(var, 0.0) + coef
        return self

    def add_const(self, value: Number) -> "LinExpr":
        self.constant += value
        return self

    def add_expr(self, other: "LinExpr", scale: Number = 1.0) -> "LinExpr":
        if scale:
            terms = self.terms
            for v, c in other.terms.items():
                terms[v] = terms.get(v, 0.0) + scale * c
            self.constant += scale * other.constant
        return self

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def value(self, x: np.ndarray) -> float:
        return self.constant + sum(c * x[v] for v, c in self.terms.items())


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    kind: str


@dataclass(frozen=True)
class Constraint:
    name: str
    vars: tuple
    coefs: tuple
    sense: str
    rhs: float


class LinearModel:
    """Minimization MILP with named variables and named linear constraints."""

    def __init__(self, name: str = "model"):
        self.name = name
        self._vnames: list[str] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._kind: list[str] = []
        self._vindex: dict[str, int] = {}
        self._cnames: list[str] = []
        self._cindex: dict[str, int] = {}
        self._cvars: list[tuple] = []
        self._ccoefs: list[tuple] = []
        self._csense: list[str] = []
        self._crhs: list[float] = []
        self.objective = LinExpr()
        self.meta: dict = {}

    # -- construction -----------------------------------------------------
    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, kind: str = CONTINUOUS) -> int:
        if name in self._vindex:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb {lb} > ub {ub}")
        idx = len(self._vnames)
        self._vindex[name] = idx
        self._vnames.append(name)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._kind.append(kind)
        return idx

    def add_constr(self, name: str, lhs: LinExpr, sense: str, rhs: Union[LinExpr, Number] = 0.0) -> int:
        """Add ``lhs sense rhs``; both sides may carry constants."""
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        if name in self._cindex:
            raise ModelError(f"duplicate constraint name {name!r}")
        expr = lhs.copy()
        if isinstance(rhs, LinExpr):
            expr.add_expr(rhs, -1.0)
        else:
            expr.add_const(-rhs)
        items = [(v, c) for v, c in expr.terms.items() if c != 0.0]
        n = len(self._vnames)
        for v, _ in items:
            if not 0 <= v < n:
                raise ModelError(f"constraint {name!r} references undeclared variable {v}")
        idx = len(self._cnames)
        self._cindex[name] = idx
        self._cnames.append(name)
        self._cvars.append(tuple(v for v, _ in items))
        self._ccoefs.append(tuple(float(c) for _, c in items))
        self._csense.append(sense)
        self._crhs.append(-expr.constant)
        return idx

    def set_objective(self, expr: LinExpr) -> None:
        self.objective = expr.copy()

    def set_bounds(self, name: str, lb: float, ub: float) -> None:
        idx = self._vindex[name]
        if lb > ub + 1e-12:
            raise ModelError(f"variable {name!r}: lb {lb} > ub {ub}")
        self._lb[idx], self._ub[idx] = float(lb), float(max(lb, ub))

    def copy(self) -> "LinearModel":
        m = LinearModel(self.name)
        for attr in ("_vnames", "_lb", "_ub", "_kind", "_cnames", "_cvars", "_ccoefs", "_csense", "_crhs"):
            setattr(m, attr, list(getattr(self, attr)))
        m._vindex = dict(self._vindex)
        m._cindex = dict(self._cindex)
        m.objective = self.objective.copy()
        m.meta = dict(self.meta)
        return m

    # -- inspection -------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self._vnames)

    @property
    def num_constraints(self) -> int:
        return len(self._cnames)

    @property
    def num_binaries(self) -> int:
        return sum(k == BINARY for k in self._kind)

    def var(self, name: str) -> int:
        return self._vindex[name]

    def has_var(self, name: str) -> bool:
        return name in self._vindex

    def variables(self) -> Iterable[Variable]:
        for i, n in enumerate(self._vnames):
            yield Variable(n, self._lb[i], self._ub[i], self._kind[i])

    def constraints(self) -> Iterable[Constraint]:
        for i, n in enumerate(self._cnames):
            yield Constraint(n, self._cvars[i], self._ccoefs[i], self._csense[i], self._crhs[i])

    def var_names(self) -> list[str]:
        return list(self._vnames)

    def constraint(self, name: str) -> Constraint:
        i = self._cindex[name]
        return Constraint(name, self._cvars[i], self._ccoefs[i], self._csense[i], self._crhs[i])

    def validate(self) -> None:
        for n in self._vnames:
            if not NAME_RE.fullmatch(n):
                raise ModelError(f"invalid variable name {n!r}")
        for n in self._cnames:
            if not NAME_RE.fullmatch(n):
                raise ModelError(f"invalid constraint name {n!r}")
        for i, (lb, ub) in enumerate(zip(self._lb, self._ub)):
            if math.isnan(lb) or math.isnan(ub):
                raise ModelError(f"NaN bound on {self._vnames[i]!r}")

    def to_arrays(self):
        """Return ``(c, offset, A, row_lo, row_hi, lb, ub, integrality)`` with ``A`` in CSR form."""
        n = self.num_vars
        c = np.zeros(n)
        for v, coef in self.objective.terms.items():
            c[v] += coef
        indptr = np.zeros(self.num_constraints + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(v) for v in self._cvars])
        indices = np.fromiter((v for row in self._cvars for v in row), dtype=np.int64, count=indptr[-1])
        data = np.fromiter((x for row in self._ccoefs for x in row), dtype=float, count=indptr[-1])
        A = sp.csr_matrix((data, indices, indptr), shape=(self.num_constraints, n))
        rhs = np.asarray(self._crhs, dtype=float)
        sense = np.asarray(self._csense)
        lo = np.where(sense == LE, -np.inf, rhs)
        hi = np.where(sense == GE, np.inf, rhs)
        integrality = np.asarray([k == BINARY for k in self._kind], dtype=np.uint8)
        return (c, self.objective.constant, A, lo, hi,
                np.asarray(self._lb), np.asarray(self._ub), integrality)

    def check_solution(self, values: np.ndarray, tol: float = 1e-6) -> list[str]:
        """Names of constraints or bounds violated by ``values`` beyond ``tol``."""
        bad = []
        for i, name in enumerate(self._vnames):
            if values[i] < self._lb[i] - tol or values[i] > self._ub[i] + tol:
                bad.append(name)
        for con in self.constraints():
            lhs = sum(c * values[v] for v, c in zip(con.vars, con.coefs))
            if ((con.sense == LE and lhs > con.rhs + tol) or (con.sense == GE and lhs < con.rhs - tol)
                    or (con.sense == EQ and abs(lhs - con.rhs) > tol)):
                bad.append(con.name)
        return bad


def expr(*pairs, constant: float = 0.0) -> LinExpr:
    """Shorthand: ``expr((v1, c1), (v2, c2), constant=k)``."""
    e = LinExpr(constant=constant)
    for v, c in pairs:
        e.add(v, c)
    return e

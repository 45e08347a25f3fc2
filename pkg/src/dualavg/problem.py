"""The composite problem min_x f(Ax) + h(x) and its Fenchel dual."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .objectives import ObjectiveF
from .prox import ProxFunction
from .spaces import LinearOperator, NormPair, as_vector


@dataclass(frozen=True)
class CompositeProblem:
    """P(x) = f(Ax) + h(x), with dual D(y) = h*(-A^T y) + f*(y)."""

    f: ObjectiveF
    A: LinearOperator
    h: ProxFunction
    norms: NormPair = field(default_factory=NormPair.euclidean)

    def __post_init__(self):
        if not isinstance(self.A, LinearOperator):
            object.__setattr__(self, "A", LinearOperator(self.A))
        if self.A.m != self.f.m:
            raise UsageError(f"A has {self.A.m} rows but f acts on R^{self.f.m}")
        if self.A.n != self.h.n:
            raise UsageError(f"A has {self.A.n} columns but h acts on R^{self.h.n}")

    @property
    def m(self):
        return self.A.m

    @property
    def n(self):
        return self.A.n

    def primal(self, x):
        hx = self.h.value(x)
        if not np.isfinite(hx):
            return np.inf
        z = self.A.matrix @ x
        if not self.f.in_domain(z):
            return np.inf
        return self.f.value(z) + hx

    def dual(self, y):
        fy = self.f.conj_value(y)
        if not np.isfinite(fy):
            return np.inf
        return self.h.conj_value(-(self.A.matrix.T @ y)) + fy


def primal_value(p: CompositeProblem, x) -> float:
    """P(x) = f(Ax) + h(x); +inf outside the domain."""
    return p.primal(as_vector(x, p.n))


def dual_value(p: CompositeProblem, y) -> float:
    """D(y) = h*(-A^T y) + f*(y); +inf when y is dual infeasible."""
    return p.dual(as_vector(y, p.m, "y"))

"""Catalog of outer functions f with subgradient and conjugate oracles.

Max-type kinds are written as f(z) = max_k <c_k, z> + d_k; their conjugate is
supported on conv{c_k}. Subgradients pick the lowest active index so runs are
deterministic.
"""
from __future__ import annotations

import numpy as np

from .conjugate import numeric_conjugate_oracle
from .errors import CapabilityError, DomainError, UsageError
from .spaces import LpProblem, as_matrix, as_vector, solve_small_lp

SIMPLEX_TOL = 1e-9


def in_simplex(y, tol=SIMPLEX_TOL):
    return bool(abs(y.sum() - 1.0) <= tol and y.min() >= -1e-12)


def in_hull(V, y):
    """Whether y lies in conv(rows of V), decided by a feasibility LP."""
    k = V.shape[0]
    A_eq = np.vstack([V.T, np.ones((1, k))])
    b_eq = np.concatenate([y, [1.0]])
    res = solve_small_lp(LpProblem(c=np.zeros(k), A_eq=A_eq, b_eq=b_eq))
    return res.optimal


class ObjectiveF:
    kind = "abstract"

    def __init__(self, m):
        self.m = int(m)

    def in_domain(self, z):
        return True

    def pieces(self):
        """(C, d) with f(z) = smooth(z) + max_k <C_k, z> + d_k."""
        raise CapabilityError(f"{self.kind} is not max-type")

    def smooth_value(self, z):
        return 0.0

    def smooth_grad(self, z):
        return np.zeros(self.m)

    def lipschitz(self, norm="l2"):
        """Global Lipschitz constant of f w.r.t. the given norm on z."""
        C, _ = self.pieces()
        dual = {"l2": 2, "linf": 1, "l1": np.inf}[norm]
        return float(np.max(np.linalg.norm(C, ord=dual, axis=1)))

    def conj_domain_vertices(self):
        raise CapabilityError(f"conjugate-domain vertices unavailable for {self.kind}")

    def to_dict(self):
        return {"kind": self.kind, "params": self.params()}

    def params(self):
        return {"m": self.m}

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m})"


class MaxCoord(ObjectiveF):
    """f(z) = max_j z_j; f* is the indicator of the unit simplex."""

    kind = "max_coord"

    def value(self, z):
        return float(z.max())

    def subgradient(self, z):
        g = np.zeros(self.m)
        g[int(np.argmax(z))] = 1.0
        return g

    def pieces(self):
        return np.eye(self.m), np.zeros(self.m)

    def conj_value(self, y):
        return 0.0 if in_simplex(y) else np.inf

    def conj_lower(self):
        return 0.0

    def conj_domain_vertices(self):
        return np.eye(self.m)


class MaxAffine(ObjectiveF):
    """f(z) = max_k <c_k, z> + d_k."""

    kind = "max_affine"

    def __init__(self, C, d=None):
        C = as_matrix(C, "C")
        super().__init__(C.shape[1])
        self.C = C
        self.d = np.zeros(C.shape[0]) if d is None else as_vector(d, C.shape[0], "d")

    def params(self):
        return {"C": self.C.tolist(), "d": self.d.tolist()}

    def value(self, z):
        return float(np.max(self.C @ z + self.d))

    def subgradient(self, z):
        return self.C[int(np.argmax(self.C @ z + self.d))].copy()

    def pieces(self):
        return self.C, self.d

    def conj_value(self, y):
        # f*(y) = min { -d.lam : C^T lam = y, lam in simplex }
        k = self.C.shape[0]
        A_eq = np.vstack([self.C.T, np.ones((1, k))])
        res = solve_small_lp(LpProblem(c=-self.d, A_eq=A_eq, b_eq=np.concatenate([y, [1.0]])))
        return res.value if res.optimal else np.inf

    def conj_lower(self):
        return float(-self.d.max())

    def conj_domain_vertices(self):
        return self.C.copy()


class SupportPolytope(ObjectiveF):
    """f(z) = max_{q in Q} <q, z> with Q = conv(vertices)."""

    kind = "support_polytope"

    def __init__(self, vertices):
        V = as_matrix(vertices, "vertices")
        super().__init__(V.shape[1])
        self.V = V

    def params(self):
        return {"vertices": self.V.tolist()}

    def value(self, z):
        return float(np.max(self.V @ z))

    def subgradient(self, z):
        return self.V[int(np.argmax(self.V @ z))].copy()

    def pieces(self):
        return self.V, np.zeros(self.V.shape[0])

    def conj_value(self, y):
        return 0.0 if in_hull(self.V, y) else np.inf

    def conj_lower(self):
        return 0.0

    def conj_domain_vertices(self):
        return self.V.copy()


class LogPlusMax(ObjectiveF):
    """f(z) = -sum ln z_i + max_i z_i on z > 0."""

    kind = "log_plus_max"

    def in_domain(self, z):
        return bool(np.all(z > 0))

    def value(self, z):
        if np.any(z <= 0):
            return np.inf
        return float(-np.sum(np.log(z)) + z.max())

    def subgradient(self, z):
        if np.any(z <= 0):
            raise DomainError("log_plus_max needs z > 0")
        g = -1.0 / z
        g[int(np.argmax(z))] += 1.0
        return g

    def pieces(self):
        return np.eye(self.m), np.zeros(self.m)

    def smooth_value(self, z):
        return float(-np.sum(np.log(z)))

    def smooth_grad(self, z):
        return -1.0 / z

    def lipschitz(self, norm="l2"):
        raise CapabilityError("log_plus_max is not globally Lipschitz")

    def lipschitz_above(self, c):
        """Exact sup of ||grad f||_2 over {z >= c}, c > 0.

        For a subgradient -1/z + e_j the j-th entry lies in [1 - 1/c_j, 1) and
        the others in [-1/c_i, 0), so the norm is maximized coordinatewise.
        """
        c = as_vector(c, self.m, "c")
        if np.any(c <= 0):
            raise UsageError("lower corner must be positive")
        inv2 = 1.0 / c ** 2
        best = 0.0
        for j in range(self.m):
            top = max((1.0 - 1.0 / c[j]) ** 2, 1.0)
            best = max(best, inv2.sum() - inv2[j] + top)
        return float(np.sqrt(best))

    def conj_value(self, y, budget=20000):
        # dom f* = {y : sum of positive parts < 1}; outside it f* = +inf
        if np.maximum(y, 0.0).sum() >= 1.0:
            return np.inf
        est = numeric_conjugate_oracle(self.value, y, -12.0, 12.0, budget=budget,
                                       transform=np.exp)
        return est.value


# ---------------------------------------------------------------- factories


def objective_from_dict(d):
    kind = d.get("kind")
    params = d.get("params", {}) or {}
    try:
        if kind == "max_coord":
            return MaxCoord(int(params["m"]))
        if kind == "max_affine":
            return MaxAffine(params["C"], params.get("d"))
        if kind == "support_polytope":
            return SupportPolytope(params["vertices"])
        if kind == "log_plus_max":
            return LogPlusMax(int(params["m"]))
    except KeyError as exc:
        raise UsageError(f"f.params missing field {exc}") from None
    raise UsageError(f"unknown objective kind {kind!r}")


# ---------------------------------------------------------------- validated API


def f_value(f: ObjectiveF, z) -> float:
    z = as_vector(z, f.m, "z")
    if not f.in_domain(z):
        raise DomainError(f"z outside dom f for {f.kind}")
    return f.value(z)


def f_subgradient(f: ObjectiveF, z) -> np.ndarray:
    z = as_vector(z, f.m, "z")
    if not f.in_domain(z):
        raise DomainError(f"z outside dom f for {f.kind}")
    return f.subgradient(z)


def f_conj_value(f: ObjectiveF, y) -> float:
    return f.conj_value(as_vector(y, f.m, "y"))


def f_conj_domain_vertices(f: ObjectiveF) -> np.ndarray:
    return f.conj_domain_vertices()

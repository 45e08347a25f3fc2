"""Affine reparametrization x = M w + b of a composite problem.

The reparametrized problem uses A M, f(. + A b) and h(M . + b). Its oracles
are wrappers around the original ones, so dual averaging on both problems
must produce iterates related by x^k = M w^k + b.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..da import da_run
from ..errors import UsageError
from ..objectives import ObjectiveF
from ..problem import CompositeProblem
from ..prox import ProxFunction, Unbounded
from ..spaces import gauge_norm


class ShiftedObjective(ObjectiveF):
    """z -> f(z + c)."""

    kind = "shifted"

    def __init__(self, f: ObjectiveF, c):
        super().__init__(f.m)
        self.base, self.c = f, np.asarray(c, dtype=float)

    def in_domain(self, z):
        return self.base.in_domain(z + self.c)

    def value(self, z):
        return self.base.value(z + self.c)

    def subgradient(self, z):
        return self.base.subgradient(z + self.c)

    def conj_value(self, y):
        v = self.base.conj_value(y)
        return v if not np.isfinite(v) else v - float(y @ self.c)

    def conj_domain_vertices(self):
        return self.base.conj_domain_vertices()


class AffinePrecomposedProx(ProxFunction):
    """w -> h(M w + b)."""

    kind = "affine_precomposed"

    def __init__(self, h: ProxFunction, M, b):
        M = np.asarray(M, dtype=float)
        super().__init__(M.shape[1])
        self.base, self.M, self.b = h, M, np.asarray(b, dtype=float)
        self.Minv = np.linalg.inv(M)
        self.conjugate_domain_open = h.conjugate_domain_open

    @property
    def separable(self):
        return False

    def _to_base(self, v):
        return self.Minv.T @ v

    def in_domain(self, w):
        return self.base.in_domain(self.M @ w + self.b)

    def value(self, w):
        return self.base.value(self.M @ w + self.b)

    def subproblem(self, u, beta):
        x = self.base.subproblem(self._to_base(u), beta)
        if isinstance(x, Unbounded):
            return x
        return self.Minv @ (x - self.b)

    def conj_value(self, v):
        ub = self._to_base(v)
        val = self.base.conj_value(ub)
        return val if not np.isfinite(val) else val - float(ub @ self.b)

    def conj_grad(self, v):
        return self.Minv @ (self.base.conj_grad(self._to_base(v)) - self.b)

    def classify(self, v):
        return self.base.classify(self._to_base(v))


def random_affine_map(n, rng, cond_max=10.0):
    """M = Q diag(d) with Q orthogonal (sign-fixed QR) and d in [1, cond_max]."""
    if cond_max < 1:
        raise UsageError("cond_max must be at least 1")
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    d = rng.uniform(1.0, cond_max, n)
    d[0], d[-1] = 1.0, cond_max  # pin the extremes so cond(M) = cond_max exactly
    M = Q * d
    if np.linalg.cond(M) > cond_max * (1 + 1e-8):
        raise UsageError("generated M is too ill-conditioned")
    return M


def reparametrize(p: CompositeProblem, M, b) -> CompositeProblem:
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    Am = p.A.matrix
    return CompositeProblem(ShiftedObjective(p.f, Am @ b), Am @ M,
                            AffinePrecomposedProx(p.h, M, b), p.norms)


@dataclass
class AffineResult:
    max_deviation: float
    M: np.ndarray
    b: np.ndarray
    steps: int


def affine_invariance_harness(p: CompositeProblem, seed, K=200, x_minus1=None,
                              M=None, b=None, cond_max=10.0) -> AffineResult:
    """Run dual averaging on p and on its reparametrization; compare iterates.

    Returns max_k ||x^k - (M w^k + b)||_2. Without explicit M, b they are
    drawn from ``seed``: b strictly inside dom h (entries in [0.5, 2]).
    """
    if K > 1000:
        raise UsageError("K is limited to 1000")
    rng = np.random.default_rng(seed)
    n = p.n
    if M is None:
        M = random_affine_map(n, rng, cond_max)
    if b is None:
        b = rng.uniform(0.5, 2.0, n)
        if not p.h.in_domain(b):
            raise UsageError("sampled shift is outside dom h")
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    x_minus1 = np.ones(n) if x_minus1 is None else np.asarray(x_minus1, dtype=float)
    q = reparametrize(p, M, b)
    w_minus1 = np.linalg.solve(M, x_minus1 - b)
    r1 = da_run(p, x_minus1, K, keep_iterates=True)
    r2 = da_run(q, w_minus1, K, keep_iterates=True)
    if not r1.ok or not r2.ok:
        raise UsageError("dual averaging is ill-defined on this instance")
    dev = max(float(np.linalg.norm(x - (M @ w + b))) for x, w in zip(r1.iterates, r2.iterates))
    return AffineResult(dev, M, b, len(r1.iterates))


def gauge_diameter(points) -> float:
    """Diameter of conv(points) in the gauge norm of its own difference set."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    best = 0.0
    for i in range(P.shape[0]):
        for j in range(i + 1, P.shape[0]):
            best = max(best, gauge_norm(P, P[i] - P[j]))
    return best

"""Independent estimate of the dual optimum D_* with a certified tolerance."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import CapabilityError, UsageError
from ..objectives import MaxCoord, SupportPolytope
from ..problem import CompositeProblem
from ..prox import Unbounded
from ..spaces import project_simplex


@dataclass
class ReferenceOptimum:
    """D_* lies in [estimate - tol, estimate].

    ``estimate`` is a dual value actually attained (an upper bound on D_*);
    the lower end is the best of a linearization bound and weak duality.
    """

    estimate: float
    tol: float
    flagged: bool
    routes: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.estimate, self.tol))


def _reduced(p):
    """Vertex matrix V with Q = conv(rows of V) and f* = 0 on Q."""
    if isinstance(p.f, (MaxCoord, SupportPolytope)):
        return p.f.conj_domain_vertices()
    raise CapabilityError("reference solver needs f* = indicator of a polytope")


def _phi_factory(p, V):
    B = V @ p.A.matrix  # y = V^T lam, so A^T y = B^T lam
    h = p.h

    def phi(lam):
        return h.conj_value(-(B.T @ lam))

    def grad(lam):
        return -B @ h.conj_grad(-(B.T @ lam))

    return phi, grad, B


def _lower_bounds(p, V, lam, phi_val, g):
    fw = phi_val + g.min() - g @ lam
    x = p.h.subproblem(p.A.matrix.T @ (V.T @ lam), 1.0)
    wd = -np.inf
    if not isinstance(x, Unbounded):
        Px = p.primal(x)
        if np.isfinite(Px):
            wd = -Px
    return max(fw, wd)


def _grid_route(phi, k, resolution):
    best, arg = np.inf, None
    for c in itertools.product(range(resolution + 1), repeat=k - 1):
        s = sum(c)
        if s > resolution:
            continue
        lam = np.array(list(c) + [resolution - s], dtype=float) / resolution
        v = phi(lam)
        if v < best:
            best, arg = v, lam
    return best, arg


def reference_dual_optimum(p: CompositeProblem, budget=20000, target=1e-10,
                           grid_resolution=None) -> ReferenceOptimum:
    """Minimize D over Q by projected gradient with backtracking.

    The tolerance is certified: D(y) minus the larger of the Frank-Wolfe
    linearization bound and -P(x) at x = grad h*(-A^T y). For at most four
    vertices a barycentric grid gives a second, independent upper bound on
    D_* which must not fall below the certified lower end.
    ``flagged`` is set when the budget ends before the tolerance reaches
    ``target``.
    """
    if budget < 10:
        raise UsageError("budget too small")
    V = _reduced(p)
    k = V.shape[0]
    if k > 10:
        raise CapabilityError("reference solver limited to at most 10 vertices")
    phi, grad, _ = _phi_factory(p, V)
    lam = np.ones(k) / k
    val = phi(lam)
    if not np.isfinite(val):
        raise CapabilityError("uniform start is not dual feasible")
    t = 1.0
    lb = -np.inf
    it = 0
    for it in range(budget):
        g = grad(lam)
        lb = max(lb, _lower_bounds(p, V, lam, val, g))
        if val - lb <= target * (1.0 + abs(val)):
            break
        while True:
            cand = project_simplex(lam - t * g)
            cv = phi(cand)
            d = cand - lam
            if np.isfinite(cv) and cv <= val + g @ d + (d @ d) / (2 * t):
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20 or np.allclose(cand, lam, rtol=0, atol=0):
            break
        lam, val = cand, cv
        t *= 2.0
    routes = {"projected_gradient": {"value": float(val), "iterations": it + 1}}
    est = val
    if k <= 4:
        res = grid_resolution or {1: 1, 2: 20000, 3: 300, 4: 60}[k]
        gval, _ = _grid_route(phi, k, res)
        routes["grid"] = {"value": float(gval), "resolution": res}
        if gval < lb - 1e-12 * (1.0 + abs(lb)):
            raise RuntimeError("grid value below certified lower bound: routes disagree")
        est = min(est, gval)
    tol = float(max(est - lb, 0.0))
    flagged = tol > target * (1.0 + abs(est))
    return ReferenceOptimum(float(est), tol, bool(flagged), routes)

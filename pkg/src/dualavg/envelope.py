"""Lipschitz extension of f restricted to a set C.

F_L(z) = inf_{z' in C} f(z') + L ||z - z'|| is the smallest L-Lipschitz convex
function that agrees with f on C (when L dominates the subgradients of f on C).
Values are computed numerically: an upper bound from an inner minimization
over C, and a lower bound from an (epsilon-)subgradient certificate at the
inner minimizer, so every value comes with a gap.

Certificate. Let zbar in C, s an eps-subgradient of f at zbar and n in the
normal cone N_C(zbar). For every z' in C, f(z') >= f(zbar) - eps + <s + n, z' - zbar>.
If g = s + n has dual norm at most L, minimizing over all z' gives
F_L(z) >= f(zbar) - eps + <g, z - zbar>.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear, minimize, nnls

from .errors import CapabilityError, UsageError
from .objectives import LogPlusMax, ObjectiveF
from .spaces import LpProblem, as_matrix, as_vector, solve_small_lp

_NORMS = {"l2": (2, 2), "linf": (np.inf, 1), "l1": (1, np.inf)}  # (norm, dual norm)


def _norm(v, kind):
    return float(np.linalg.norm(v, ord=_NORMS[kind][0]))


def _dual_norm(v, kind):
    return float(np.linalg.norm(v, ord=_NORMS[kind][1]))


def _norm_subgradient(w, kind):
    """Unit-dual-norm vector t with <t, w> = ||w||."""
    if kind == "l2":
        nw = np.linalg.norm(w)
        return w / nw if nw > 0 else np.zeros_like(w)
    if kind == "linf":
        t = np.zeros_like(w)
        j = int(np.argmax(np.abs(w)))
        t[j] = np.sign(w[j])
        return t
    return np.sign(w)


# ---------------------------------------------------------------- the set C


class ConstraintSetC:
    """Polyhedral set C with membership, sampling and tangent-cone projection.

    Kinds:
      ``shifted_cone``  C = base + {G theta : theta >= 0}
      ``polytope``      C = conv(rows of V)
      ``box``           C = [lo, hi]
    """

    def __init__(self, kind, **params):
        self.kind = kind
        if kind == "shifted_cone":
            self.base = as_vector(params["base"], name="base")
            self.G = as_matrix(params["G"], "G")
            if self.G.shape[0] != self.base.shape[0]:
                raise UsageError("G rows must match base")
            self.dim = self.base.shape[0]
        elif kind == "polytope":
            self.V = as_matrix(params["V"], "V")
            self.dim = self.V.shape[1]
        elif kind == "box":
            self.lo = as_vector(params["lo"], name="lo")
            self.hi = as_vector(params["hi"], self.lo.shape[0], "hi")
            if np.any(self.lo > self.hi):
                raise UsageError("box has lo > hi")
            self.dim = self.lo.shape[0]
        else:
            raise UsageError(f"unknown set kind {kind!r}")

    @classmethod
    def shifted_cone(cls, base, G):
        return cls("shifted_cone", base=base, G=G)

    @classmethod
    def polytope(cls, V):
        return cls("polytope", V=V)

    @classmethod
    def box(cls, lo, hi):
        return cls("box", lo=lo, hi=hi)

    def to_dict(self):
        if self.kind == "shifted_cone":
            return {"kind": self.kind, "base": self.base.tolist(), "G": self.G.tolist()}
        if self.kind == "polytope":
            return {"kind": self.kind, "V": self.V.tolist()}
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(d.pop("kind"), **d)

    # -- coordinates

    def coords(self, z):
        """Parameters of the closest point of the generator image and the residual."""
        z = np.asarray(z, dtype=float)
        if self.kind == "shifted_cone":
            theta, res = nnls(self.G, z - self.base)
            return theta, res
        if self.kind == "polytope":
            k = self.V.shape[0]
            M = np.vstack([self.V.T, 1e3 * np.ones((1, k))])
            lam, res = nnls(M, np.concatenate([z, [1e3]]))
            return lam, res
        clipped = np.clip(z, self.lo, self.hi)
        return clipped, float(np.linalg.norm(z - clipped))

    def point(self, param):
        if self.kind == "shifted_cone":
            return self.base + self.G @ param
        if self.kind == "polytope":
            return self.V.T @ param
        return np.asarray(param, dtype=float)

    def contains(self, z, tol=1e-10):
        z = as_vector(z, self.dim, "z")
        if self.kind == "box":
            return bool(np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))
        _, res = self.coords(z)
        return bool(res <= tol * (1.0 + np.linalg.norm(z)))

    def sample(self, rng, count=1, spread=2.0):
        """Random points of C (rows)."""
        out = []
        for _ in range(count):
            if self.kind == "shifted_cone":
                theta = rng.exponential(spread, self.G.shape[1])
                theta *= rng.random(self.G.shape[1]) < 0.8  # hit faces too
                out.append(self.point(theta))
            elif self.kind == "polytope":
                out.append(rng.dirichlet(np.ones(self.V.shape[0]) * 0.7) @ self.V)
            else:
                out.append(self.lo + (self.hi - self.lo) * rng.random(self.dim))
        return np.array(out)

    # -- cones at a point of C

    def tangent_projection(self, zbar, v, param=None):
        """Euclidean projection of v onto the tangent cone T_C(zbar)."""
        v = np.asarray(v, dtype=float)
        if self.kind == "box":
            w = v.copy()
            at_lo = zbar <= self.lo + 1e-12 * (1 + np.abs(self.lo))
            at_hi = zbar >= self.hi - 1e-12 * (1 + np.abs(self.hi))
            w[at_lo] = np.maximum(w[at_lo], 0.0)
            w[at_hi] = np.minimum(w[at_hi], 0.0)
            w[at_lo & at_hi] = 0.0
            return w
        if self.kind == "polytope":
            D = (self.V - zbar).T
            keep = np.linalg.norm(D, axis=0) > 1e-14
            if not np.any(keep):
                return np.zeros_like(v)
            delta, _ = nnls(D[:, keep], v)
            return D[:, keep] @ delta
        theta = self.coords(zbar)[0] if param is None else param
        free = theta > 1e-12 * (1.0 + np.abs(theta).max())
        lb = np.where(free, -np.inf, 0.0)
        sol = lsq_linear(self.G, v, bounds=(lb, np.full_like(lb, np.inf)),
                         method="bvls", tol=1e-14)
        return self.G @ sol.x

    def normal_projection(self, zbar, v, param=None):
        """Projection onto N_C(zbar), the polar of the tangent cone."""
        v = np.asarray(v, dtype=float)
        return v - self.tangent_projection(zbar, v, param)

    # -- parametrization used by the inner solver

    def _param_problem(self):
        """(initial params, bounds, equality constraint or None)."""
        if self.kind == "shifted_cone":
            k = self.G.shape[1]
            return [(0.0, None)] * k, None
        if self.kind == "polytope":
            k = self.V.shape[0]
            return [(0.0, 1.0)] * k, {"type": "eq", "fun": lambda p: np.sum(p[:k]) - 1.0,
                                     "jac": lambda p: np.concatenate([np.ones(k), np.zeros(p.shape[0] - k)])}
        return list(zip(self.lo, self.hi)), None

    def _jac_point(self):
        if self.kind == "shifted_cone":
            return self.G
        if self.kind == "polytope":
            return self.V.T
        return np.eye(self.dim)


@dataclass
class LipschitzExtension:
    f: ObjectiveF
    C: ConstraintSetC
    L: float
    norm: str = "l2"

    def __post_init__(self):
        if self.norm not in _NORMS:
            raise UsageError(f"unknown norm {self.norm!r}")
        if not self.L > 0:
            raise UsageError("L must be positive")
        if self.C.dim != self.f.m:
            raise UsageError("C and f live in different dimensions")


@dataclass
class FLResult:
    value: float  # upper bound (value at a point of C)
    gap: float  # value - certified lower bound
    coarse: bool
    argmin: np.ndarray
    lower: float

    def __float__(self):
        return float(self.value)


@dataclass
class NotCertified:
    reason: str

    def __bool__(self):
        return False


# ---------------------------------------------------------------- evaluation


def _pieces_at(f, z, eps_max):
    """eps-subgradients of a max-type f at z: list of (s, eps)."""
    C, d = f.pieces()
    vals = C @ z + d
    top = vals.max()
    grad = f.smooth_grad(z)
    out = []
    for j in np.argsort(top - vals, kind="stable"):
        e = float(top - vals[j])
        if e > eps_max:
            break
        out.append((grad + C[j], e))
    return out


def _balanced_piece(C, zbar, param, cands, t):
    """Blend of eps-subgradients s(lam) making t - s(lam) closest to N_C(zbar).

    At an exact inner minimizer some blend puts t - s(lam) in the normal cone,
    and the certificate is then tight. The residual ||P_T(t - s(lam))||^2 is
    convex in lam, minimized here over the simplex.
    """
    S = np.array([s for s, _ in cands])
    E = np.array([e for _, e in cands])
    k = S.shape[0]

    def resid(lam):
        r = C.tangent_projection(zbar, t - lam @ S, param)
        return float(r @ r)

    res = minimize(resid, np.full(k, 1.0 / k), method="SLSQP", bounds=[(0.0, 1.0)] * k,
                   constraints=[{"type": "eq", "fun": lambda l: l.sum() - 1.0}],
                   options={"maxiter": 200, "ftol": 1e-20})
    lam = np.maximum(res.x, 0.0)
    lam = lam / lam.sum()
    return lam @ S, float(lam @ E)


def _lower_bound(ext, z, zbar, param):
    """Best certificate lower bound on F_L(z) from eps-subgradients at zbar."""
    f, C, L = ext.f, ext.C, ext.L
    fz = f.value(zbar)
    w = z - zbar
    t = L * _norm_subgradient(w, ext.norm)
    cands = _pieces_at(f, zbar, 1e-3 * (1.0 + abs(fz)))
    combos = [(s, e) for s, e in cands]
    for (s1, e1), (s2, e2) in itertools.combinations(cands[:4], 2):
        for lam in np.linspace(0.1, 0.9, 9):
            combos.append((lam * s1 + (1 - lam) * s2, lam * e1 + (1 - lam) * e2))
    if len(cands) > 1:
        combos.append(_balanced_piece(C, zbar, param, cands[:8], t))
    best = -np.inf
    for s, e in combos:
        g0 = -C.tangent_projection(zbar, -s, param)  # min-norm element of s + N
        if _dual_norm(g0, ext.norm) > L * (1 + 1e-12):
            continue
        g1 = s + C.normal_projection(zbar, t - s, param)
        g = g1
        if _dual_norm(g1, ext.norm) > L:
            lo, hi = 0.0, 1.0  # largest blend weight keeping the norm bound
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _dual_norm((1 - mid) * g0 + mid * g1, ext.norm) <= L:
                    lo = mid
                else:
                    hi = mid
            g = (1 - lo) * g0 + lo * g1
        best = max(best, fz - e + float(g @ w))
    return best


def _objective(ext, z):
    f, C, L = ext.f, ext.C, ext.L
    J = C._jac_point()

    def phi(p):
        zp = C.point(p)
        if not f.in_domain(zp):
            return np.inf
        return f.value(zp) + L * _norm(z - zp, ext.norm)

    return phi, J


def _inner_solve(ext, z, starts):
    """Minimize f(z') + L||z - z'|| over z' in C; returns (params, value)."""
    f, C, L = ext.f, ext.C, ext.L
    Cm, dm = f.pieces()
    phi, J = _objective(ext, z)
    bounds, eq = C._param_problem()
    k = len(bounds)
    npc = Cm.shape[0]

    def split(v):
        return v[:k], v[k]

    # epigraph variable for the max part; the l2 norm is kept smooth (guarded at 0)
    def obj(v):
        p, s = split(v)
        zp = C.point(p)
        r = z - zp
        val = f.smooth_value(zp) + s
        if ext.norm == "l2":
            val += L * np.sqrt(r @ r + 1e-300)
        elif ext.norm == "linf":
            val += L * np.abs(r).max()
        else:
            val += L * np.abs(r).sum()
        return val

    def obj_grad(v):
        p, s = split(v)
        zp = C.point(p)
        r = z - zp
        gz = f.smooth_grad(zp) - L * _norm_subgradient(r, ext.norm)
        return np.concatenate([J.T @ gz, [1.0]])

    cons = [{"type": "ineq",
             "fun": lambda v: v[k] - (Cm @ C.point(v[:k]) + dm),
             "jac": lambda v: np.hstack([-(Cm @ J), np.ones((npc, 1))])}]
    if eq is not None:
        cons.append({"type": "eq", "fun": lambda v: eq["fun"](v),
                     "jac": lambda v: eq["jac"](v)})
    best_p, best_val = None, np.inf
    for p0 in starts:
        zp0 = C.point(p0)
        s0 = float(np.max(Cm @ zp0 + dm))
        v0 = np.concatenate([p0, [s0]])
        try:
            res = minimize(obj, v0, jac=obj_grad, method="SLSQP", constraints=cons,
                           bounds=list(bounds) + [(None, None)],
                           options={"maxiter": 500, "ftol": 1e-15})
            cand = [res.x[:k], p0]
        except (ValueError, FloatingPointError):
            cand = [p0]
        for p in cand:
            p = _clean_params(C, p)
            val = phi(p)
            if val < best_val:
                best_p, best_val = p, val
    return _pattern_polish(phi, C, best_p, best_val)


def _clean_params(C, p):
    p = np.asarray(p, dtype=float).copy()
    if C.kind == "shifted_cone":
        return np.maximum(p, 0.0)
    if C.kind == "polytope":
        p = np.maximum(p, 0.0)
        return p / p.sum()
    return np.clip(p, C.lo, C.hi)


def _pattern_polish(phi, C, p, val, budget=4000):
    step = 0.1 * (1.0 + np.abs(p))
    evals = 0
    while evals < budget and np.any(step > 1e-13):
        improved = False
        for i in range(p.shape[0]):
            for sgn in (1.0, -1.0):
                trial = p.copy()
                trial[i] += sgn * step[i]
                trial = _clean_params(C, trial)
                tv = phi(trial)
                evals += 1
                if tv < val:
                    p, val, improved = trial, tv, True
                    break
        if not improved:
            step = step / 2.0
    return p, val


def eval_FL(ext: LipschitzExtension, z, tol=1e-6) -> FLResult:
    """Value of the envelope at z with a certified gap.

    For z in C with a subgradient of norm at most L, the result is exactly
    f(z) with zero gap. Otherwise an inner minimization over C provides the
    value (an upper bound) and the certificate a lower bound; ``coarse`` is
    set when their difference exceeds ``tol``.
    """
    z = as_vector(z, ext.C.dim, "z")
    C, f = ext.C, ext.f
    param, res = C.coords(z)
    if C.kind == "box" or res <= 1e-12 * (1.0 + np.linalg.norm(z)):
        if C.contains(z) and f.in_domain(z):
            fz = f.value(z)
            lb = _lower_bound(ext, z, z, None if C.kind == "box" else param)
            if lb >= fz - 1e-12 * (1 + abs(fz)):
                return FLResult(fz, 0.0, False, z.copy(), fz)
    starts = [_clean_params(C, param)]
    if C.kind == "shifted_cone":
        starts.append(np.zeros(C.G.shape[1]))
    elif C.kind == "polytope":
        starts.append(np.full(C.V.shape[0], 1.0 / C.V.shape[0]))
    else:
        starts.append(0.5 * (C.lo + C.hi))
    p, val = _inner_solve(ext, z, starts)
    zbar = C.point(p)
    lb = _lower_bound(ext, z, zbar, p if C.kind == "shifted_cone" else None)
    gap = max(val - lb, 0.0)
    return FLResult(float(val), float(gap), bool(gap > tol), zbar, float(lb))


def subgrad_FL_on_C(ext: LipschitzExtension, z):
    """A subgradient of F_L at a point z of C, or ``NotCertified``.

    Tries each active piece s of the subdifferential of f at z: s itself if its
    dual norm is at most L, else the smallest-norm element of s + N_C(z).
    """
    z = as_vector(z, ext.C.dim, "z")
    if not ext.C.contains(z):
        raise UsageError("z is not in C")
    param = None if ext.C.kind != "shifted_cone" else ext.C.coords(z)[0]
    for s, e in _pieces_at(ext.f, z, 0.0):
        if _dual_norm(s, ext.norm) <= ext.L + 1e-9:
            return s
        g = -ext.C.tangent_projection(z, -s, param)
        if _dual_norm(g, ext.norm) <= ext.L + 1e-9:
            return g
    return NotCertified("no element of (subdifferential + normal cone) within the L-ball")


def dom_FLstar_membership(ext: LipschitzExtension, y, eps=1e-7) -> str:
    """Decide whether y is in the domain of the conjugate of F_L.

    Only for f = -sum ln z_i + max z_i on a shifted cone C = base + cone(G):
    y is a member iff ||y||_dual <= L and y = y1 + y2 with G^T y2 <= 0 and the
    positive parts of y1 summing to less than 1 (taken as <= 1 - eps).
    The sum over the worst index subset is the sum of positive entries, which
    gives the LP: min sum p  s.t.  p >= y - y2, p >= 0, G^T y2 <= 0.
    """
    if not isinstance(ext.f, LogPlusMax) or ext.C.kind != "shifted_cone":
        raise CapabilityError("membership test only for log_plus_max on a shifted cone")
    y = as_vector(y, ext.C.dim, "y")
    if _dual_norm(y, ext.norm) > ext.L:
        return "nonmember"
    m = y.shape[0]
    G = ext.C.G
    k = G.shape[1]
    # variables: y2 (free, m), p (>= 0, m)
    c = np.concatenate([np.zeros(m), np.ones(m)])
    A_ub = np.vstack([np.hstack([G.T, np.zeros((k, m))]),
                      np.hstack([-np.eye(m), -np.eye(m)])])
    b_ub = np.concatenate([np.zeros(k), -y])
    lower = np.concatenate([np.full(m, -np.inf), np.zeros(m)])
    res = solve_small_lp(LpProblem(c=c, A_ub=A_ub, b_ub=b_ub, lower=lower))
    if res.optimal and res.value <= 1.0 - eps:
        return "member"
    return "nonmember"


def estimate_L_on_C(f: ObjectiveF, C: ConstraintSetC, samples=200, rng=None, norm="l2"):
    """Heuristic Lipschitz constant of f on C: 1.25 x the largest sampled quotient.

    ``samples`` is either a count (points drawn from C) or an array of points.
    """
    if np.isscalar(samples):
        rng = rng if rng is not None else np.random.default_rng(0)
        pts = C.sample(rng, int(samples))
    else:
        pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise UsageError("need at least two sample points")
    vals = np.array([f.value(p) for p in pts])
    best, distinct = 0.0, False
    for i in range(pts.shape[0]):
        d = np.linalg.norm(pts[i + 1:] - pts[i], ord=_NORMS[norm][0], axis=1)
        ok = d > 0
        if np.any(ok):
            distinct = True
            best = max(best, float(np.max(np.abs(vals[i + 1:][ok] - vals[i]) / d[ok])))
    if not distinct:
        raise UsageError("degenerate sample set")
    return 1.25 * best

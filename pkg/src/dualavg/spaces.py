"""Dense vectors, linear operators, norm pairs and a small LP solver.

Everything here works on plain numpy arrays. Inputs are validated once at the
public boundary (finite entries, matching shapes); internal callers that
already hold validated arrays can use the underscored helpers directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .errors import CertificateError, UsageError

MAX_LP_VARS = 1000
MAX_LP_ROWS = 1000


def as_vector(x, n=None, name="x"):
    """Return `x` as a finite 1-D float array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise UsageError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise UsageError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise UsageError(f"{name} contains non-finite entries")
    return v


def as_matrix(a, name="A"):
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise UsageError(f"{name} must be two-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise UsageError(f"{name} contains non-finite entries")
    return m


class LinearOperator:
    """Dense linear map x -> A x with rows A_j; adjoint is the transpose."""

    def __init__(self, matrix):
        self.matrix = as_matrix(matrix)
        self.matrix.setflags(write=False)
        self.m, self.n = self.matrix.shape

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix.T @ y

    def __repr__(self):
        return f"LinearOperator(m={self.m}, n={self.n})"


def apply(A: LinearOperator, x) -> np.ndarray:
    """Return A x after checking shapes and finiteness."""
    return A.apply(as_vector(x, A.n))


def adjoint(A: LinearOperator, y) -> np.ndarray:
    """Return A* y after checking shapes and finiteness."""
    return A.adjoint(as_vector(y, A.m, "y"))


def project_simplex(v, radius=1.0):
    """Euclidean projection of `v` onto {x >= 0, sum x = radius} (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


# ---------------------------------------------------------------- small LP


@dataclass(frozen=True)
class LpProblem:
    """min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.

    Missing bounds default to x >= 0 (lower = 0, upper = +inf). Use -inf / +inf
    entries for free directions.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    value: float = float("nan")
    certified: bool = False
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")

    @property
    def optimal(self):
        return self.status == "optimal"


def _rows(a, b, n, name):
    if a is None:
        return np.zeros((0, n)), np.zeros(0)
    a = as_matrix(np.atleast_2d(np.asarray(a, dtype=float)), name)
    b = as_vector(b, a.shape[0], "b_" + name)
    if a.shape[1] != n:
        raise UsageError(f"{name} has {a.shape[1]} columns, expected {n}")
    return a, b


def _pivot(T, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run_simplex(T, basis, allowed, tol, max_iter):
    """Bland's-rule primal simplex on tableau T (objective in the last row)."""
    nrow = T.shape[0] - 1
    for _ in range(max_iter):
        d = T[-1, :allowed]
        enter = np.flatnonzero(d < -tol)
        if enter.size == 0:
            return "optimal"
        j = enter[0]
        col = T[:nrow, j]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            return "unbounded"
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * max(1.0, abs(best))]
        r = ties[np.argmin([basis[i] for i in ties])]
        _pivot(T, r, j)
        basis[r] = j
    raise CertificateError("LP pivot limit reached")


def solve_small_lp(p: LpProblem, tol=1e-11) -> LpResult:
    """Solve a dense LP by the two-phase simplex method with Bland's rule.

    Infeasible and unbounded problems are reported through ``status``.
    The final basis is re-solved against the original data so the returned
    point is accurate to working precision, and ``certified`` records whether
    primal feasibility and dual feasibility (nonnegative reduced costs) both
    hold to 1e-9.
    """
    c = as_vector(p.c, name="c")
    n = c.shape[0]
    A_ub, b_ub = _rows(p.A_ub, p.b_ub, n, "A_ub")
    A_eq, b_eq = _rows(p.A_eq, p.b_eq, n, "A_eq")
    lo = np.zeros(n) if p.lower is None else np.asarray(p.lower, dtype=float).copy()
    hi = np.full(n, np.inf) if p.upper is None else np.asarray(p.upper, dtype=float).copy()
    if lo.shape != (n,) or hi.shape != (n,) or np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise UsageError("bounds must be length-n arrays without NaN")
    if n > MAX_LP_VARS or A_ub.shape[0] + A_eq.shape[0] > MAX_LP_ROWS:
        raise UsageError(f"LP exceeds the dense cap ({MAX_LP_VARS} vars / {MAX_LP_ROWS} rows)")
    if np.any(lo > hi) or np.any(hi == -np.inf) or np.any(lo == np.inf):
        return LpResult("infeasible")

    # x = Tm @ xs + off with xs >= 0
    cols, off = [], np.zeros(n)
    extra_rows = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo[j]):
            off[j] = lo[j]
            cols.append(e)
            if np.isfinite(hi[j]):
                extra_rows.append((len(cols) - 1, hi[j] - lo[j]))
        elif np.isfinite(hi[j]):
            off[j] = hi[j]
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    Tm = np.array(cols).T
    N = Tm.shape[1]

    Aub_s = A_ub @ Tm
    bub_s = b_ub - A_ub @ off
    if extra_rows:
        R = np.zeros((len(extra_rows), N))
        for i, (k, v) in enumerate(extra_rows):
            R[i, k] = 1.0
        Aub_s = np.vstack([Aub_s, R])
        bub_s = np.concatenate([bub_s, [v for _, v in extra_rows]])
    Aeq_s = A_eq @ Tm
    beq_s = b_eq - A_eq @ off
    c_s = Tm.T @ c

    p_ub, p_eq = Aub_s.shape[0], Aeq_s.shape[0]
    nrow = p_ub + p_eq
    nstd = N + p_ub
    M = np.zeros((nrow, nstd))
    M[:p_ub, :N] = Aub_s
    M[:p_ub, N:] = np.eye(p_ub)
    M[p_ub:, :N] = Aeq_s
    rhs = np.concatenate([bub_s, beq_s])
    c_std = np.concatenate([c_s, np.zeros(p_ub)])

    if nrow == 0:
        if np.any(c_std < -tol):
            return LpResult("unbounded")
        xs = np.zeros(N)
        x = Tm @ xs + off
        return LpResult("optimal", x, float(c @ x), True, 0.0, 0.0)

    sign = np.where(rhs < 0, -1.0, 1.0)
    Ms = M * sign[:, None]
    rs = rhs * sign
    basis = [-1] * nrow
    art_rows = []
    for i in range(nrow):
        if i < p_ub and sign[i] > 0:
            basis[i] = N + i
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    ncol = nstd + n_art
    T = np.zeros((nrow + 1, ncol + 1))
    T[:nrow, :nstd] = Ms
    T[:nrow, -1] = rs
    for k, i in enumerate(art_rows):
        T[i, nstd + k] = 1.0
        basis[i] = nstd + k
    max_iter = 50 * (nrow + ncol) + 1000
    scale = 1.0 + np.abs(rs).max(initial=0.0)

    if n_art:
        T[-1, nstd:ncol] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        _run_simplex(T, basis, ncol, tol, max_iter)
        if -T[-1, -1] > 1e-9 * scale:
            return LpResult("infeasible")
        # drive remaining artificials out of the basis
        keep = np.ones(nrow, dtype=bool)
        for i in range(nrow):
            if basis[i] >= nstd:
                cand = np.flatnonzero(np.abs(T[i, :nstd]) > 1e-9)
                if cand.size:
                    _pivot(T, i, cand[0])
                    basis[i] = cand[0]
                else:
                    keep[i] = False
        rows_kept = np.flatnonzero(keep)
        T = np.vstack([T[rows_kept], T[-1:]])
        T = np.hstack([T[:, :nstd], T[:, -1:]])
        basis = [basis[i] for i in rows_kept]
        Ms, rs, M, rhs = Ms[rows_kept], rs[rows_kept], M[rows_kept], rhs[rows_kept]
        nrow = len(rows_kept)
    else:
        T = np.hstack([T[:, :nstd], T[:, -1:]])

    T[-1] = 0.0
    T[-1, :nstd] = c_std
    for i, bi in enumerate(basis):
        T[-1] -= c_std[bi] * T[i]
    status = _run_simplex(T, basis, nstd, tol, max_iter)
    if status == "unbounded":
        return LpResult("unbounded")

    # refine from the final basis using the original data
    xstd = np.zeros(nstd)
    if nrow:
        B = M[:, basis]
        try:
            xstd[basis] = np.linalg.solve(B, rhs)
            y = np.linalg.solve(B.T, c_std[basis])
        except np.linalg.LinAlgError:
            xstd[basis] = T[:nrow, -1]
            y = np.linalg.lstsq(B.T, c_std[basis], rcond=None)[0]
        if np.any(xstd < -1e-9 * scale):
            xstd[basis] = T[:nrow, -1]
        xstd = np.maximum(xstd, 0.0)
        red = c_std - M.T @ y
    else:
        red = c_std
    x = Tm @ xstd[:N] + off
    pres = 0.0
    if A_ub.shape[0]:
        pres = max(pres, float(np.max(A_ub @ x - b_ub, initial=0.0)))
    if A_eq.shape[0]:
        pres = max(pres, float(np.max(np.abs(A_eq @ x - b_eq))))
    pres = max(pres, float(np.max(lo - x, initial=0.0)), float(np.max(x - hi, initial=0.0)))
    dres = float(max(0.0, -red.min(initial=0.0)))
    certified = pres <= 1e-9 * scale and dres <= 1e-9 * (1.0 + np.abs(c).max(initial=0.0))
    return LpResult("optimal", x, float(c @ x), bool(certified), pres, dres)


# ---------------------------------------------------------------- gauge norm


def _difference_generators(points):
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(P)):
        raise UsageError("points contain non-finite entries")
    gens = []
    for i, j in permutations(range(P.shape[0]), 2):
        d = P[i] - P[j]
        if np.any(d != 0.0):
            gens.append(d)
    dim = P.shape[1]
    if not gens or np.linalg.matrix_rank(np.array(gens)) < dim:
        raise CertificateError("gauge undefined: U not solid")
    return np.array(gens)


def gauge_norm(points, u) -> float:
    """Minkowski functional of U - U at u, where U = conv(points).

    Solved as min sum(mu) subject to sum mu_k d_k = u, mu >= 0 over the
    pairwise differences d_k of the points.
    """
    D = _difference_generators(points)
    u = as_vector(u, D.shape[1], "u")
    return _gauge(D, u)


def _gauge(D, u):
    if not np.any(u):
        return 0.0
    k = D.shape[0]
    res = solve_small_lp(LpProblem(c=np.ones(k), A_eq=D.T, b_eq=u))
    if not res.optimal:
        raise CertificateError("gauge undefined: U not solid")
    return res.value


@dataclass(frozen=True)
class NormPair:
    """Primal norm on x-space and its dual norm on u-space.

    kind is ``euclidean`` (l2/l2), ``sup_pair`` (l1 primal / l-inf dual) or
    ``gauge``. The gauge dual norm is the Minkowski functional of U - U for
    U = conv(points); its primal norm is the support function of U - U.
    """

    kind: str = "euclidean"
    points: np.ndarray | None = None
    _gens: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def sup_pair(cls):
        return cls("sup_pair")

    @classmethod
    def gauge(cls, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        return cls("gauge", P, _difference_generators(P))

    def __post_init__(self):
        if self.kind not in ("euclidean", "sup_pair", "gauge"):
            raise UsageError(f"unknown norm kind {self.kind!r}")
        if self.kind == "gauge" and self._gens is None:
            raise UsageError("use NormPair.gauge(points) to build a gauge norm")

    def primal(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return float(np.linalg.norm(x))
        if self.kind == "sup_pair":
            return float(np.abs(x).sum())
        return float(np.max(self._gens @ x, initial=0.0))

    def dual(self, u) -> float:
        u = np.asarray(u, dtype=float)
        if self.kind == "euclidean":
            return float(np.linalg.norm(u))
        if self.kind == "sup_pair":
            return float(np.abs(u).max(initial=0.0))
        return _gauge(self._gens, u)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "gauge":
            d["points"] = self.points.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        if d.get("kind") == "gauge":
            return cls.gauge(d["points"])
        return cls(d.get("kind", "euclidean"))

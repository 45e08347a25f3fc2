"""Computable constants behind the convergence bounds.

All lower bounds here are sound (they never overstate the true constant);
upper bounds obtained by sampling are used only as sanity checks.

Notation: Q = cl dom f* (given by its vertices), U = -A^T Q, and the iterate
set S_bar = conv(grad h*(U)). When U is not inside int dom h*, the analysis of
the dual-monotone method works instead with the sublevel image
U_bar = -A^T {y : D(y) <= D(sbar0)}, its r-enlargement and
S(r) = conv(grad h*(U_bar(r))).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CapabilityError, CertificateError, UsageError
from .mda import k_threshold_bound
from .problem import CompositeProblem
from .prox import BOUNDARY, EXTERIOR, INTERIOR, LogBarrier, NegPower, ProxFunction, SumExp
from .spaces import NormPair


@dataclass
class Assumption2Result:
    passed: bool
    witness: np.ndarray | None = None
    verdict: str = INTERIOR

    def __bool__(self):
        return self.passed

    def to_dict(self):
        if self.passed:
            return {"status": "pass"}
        return {"status": "fail", "witness": self.witness.tolist(), "verdict": self.verdict}


@dataclass
class DeltaBound:
    """Lower bound on the distance from the dual iterate image to bd dom h*.

    ``coord_floor[i]`` is a certified lower bound on |u_i| over that image
    (for sign-orthant conjugate domains), ``route`` says how it was obtained.
    """

    value: float
    route: str
    coord_floor: np.ndarray | None = None


@dataclass
class CertificateReport:
    mu_lower: float | None
    mu_upper: float | None
    diam_u: float
    assumption2: Assumption2Result
    assumption3: dict
    delta_lower: float | None
    ell_upper: float
    k_threshold_ub: int | None
    iterate_box: np.ndarray | None
    mu_scope: str | None = None  # "S_bar", "S_r" or None
    notes: list = field(default_factory=list)
    sublevel_level: float | None = None  # D(sbar0) the S_r constants assume

    def to_json_dict(self):
        box = None if self.iterate_box is None else self.iterate_box.tolist()
        return {
            "mu_lower": self.mu_lower,
            "mu_upper": self.mu_upper,
            "diam_u": self.diam_u,
            "assumption2": self.assumption2.to_dict(),
            "assumption3": dict(self.assumption3),
            "delta_lower": self.delta_lower,
            "ell_upper": self.ell_upper,
            "k_threshold_ub": self.k_threshold_ub,
            "iterate_box": box,
            "mu_scope": self.mu_scope,
            "sublevel_level": self.sublevel_level,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------- geometry of U


def u_vertices(p: CompositeProblem) -> np.ndarray:
    """Rows are -A^T y over the vertices y of Q."""
    Y = p.f.conj_domain_vertices()
    return -(Y @ p.A.matrix)


def diam_U(p: CompositeProblem) -> float:
    """max over vertex pairs of ||A^T (y - y')||_* (a convex maximum sits at vertices)."""
    V = u_vertices(p)
    best = 0.0
    for i in range(V.shape[0]):
        for j in range(i + 1, V.shape[0]):
            best = max(best, p.norms.dual(V[i] - V[j]))
    return float(best)


def check_assumption2(p: CompositeProblem) -> Assumption2Result:
    """Whether U lies in int dom h*.

    int dom h* is convex, so it contains U = conv(vertices) as soon as it
    contains every vertex; the first vertex that fails is returned as witness.
    """
    Y = p.f.conj_domain_vertices()
    for y in Y:
        verdict = p.h.classify(-(p.A.matrix.T @ y))
        if verdict != INTERIOR:
            return Assumption2Result(False, y.copy(), verdict)
    return Assumption2Result(True)


# ---------------------------------------------------------------- strong convexity


def _norm_key(norms: NormPair):
    if norms.kind == "euclidean":
        return "l2"
    if norms.kind == "sup_pair":
        return "l1"
    raise CapabilityError("closed-form modulus only for l2 or l1 primal norms")


def mu_lower_separable(h: ProxFunction, box, norm="l2") -> float:
    """Certified lower bound on the strong-convexity modulus of h over a box.

    With d_i the smallest second derivative of the i-th term over the box,
    x^T H x >= sum d_i x_i^2 >= min_i d_i ||x||_2^2, and also
    >= ||x||_1^2 / sum(1/d_i) by Cauchy-Schwarz for the l1 norm.
    The bound holds for any convex compact subset of the box.
    """
    box = np.asarray(box, dtype=float)
    if box.shape != (h.n, 2):
        raise UsageError(f"box must have shape ({h.n}, 2)")
    lo, hi = box[:, 0], box[:, 1]
    if np.any(lo > hi):
        raise UsageError("box has lo > hi")
    if isinstance(h, (LogBarrier, NegPower)) and np.any(lo <= 0):
        raise CertificateError("box leaves the domain of h")
    d = np.asarray(h.hessian_floor(lo, hi), dtype=float)
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise CertificateError("unbounded box")
    if norm == "l2":
        return float(d.min())
    if norm == "l1":
        return float(1.0 / np.sum(1.0 / d))
    raise UsageError(f"unknown norm {norm!r}")


def _grad_box(h, ulo, uhi):
    """Coordinate hull of grad h* over the box [ulo, uhi] (monotone separable h*)."""
    if not h.separable:
        raise CapabilityError("iterate box needs a separable h")
    xlo = h.conj_grad(ulo)
    xhi = h.conj_grad(uhi)
    return np.column_stack([np.minimum(xlo, xhi), np.maximum(xlo, xhi)])


def iterate_box(p: CompositeProblem) -> np.ndarray:
    """Per-coordinate interval hull of grad h*(U); contains every DA iterate.

    Needs U inside int dom h* and a separable h, for which each coordinate of
    grad h* is a nondecreasing function of the same coordinate of u.
    """
    if not check_assumption2(p):
        raise CertificateError("U is not inside int dom h*")
    V = u_vertices(p)
    return _grad_box(p.h, V.min(axis=0), V.max(axis=0))


def mu_upper_sampled(h: ProxFunction, sampler, trials=2000, rng=None, norm="l2") -> float:
    """Smallest sampled strong-convexity quotient: an upper bound on the modulus.

    The quotient is [l h(x) + (1-l) h(x') - h(l x + (1-l) x')] / (l(1-l)/2 ||x-x'||^2)
    over sampled pairs and l in {0.1,...,0.9} plus values near 0 and 1.
    A sampler that only ever returns one point describes a singleton set, for
    which the modulus is 1 by convention. Each quotient is raised by a bound on
    its floating-point cancellation error so the result stays an upper bound.
    """
    if trials < 2:
        raise UsageError("need at least two samples")
    rng = rng if rng is not None else np.random.default_rng(0)
    lams = np.concatenate([np.linspace(0.1, 0.9, 9), [1e-3, 1 - 1e-3]])
    nrm = (lambda v: np.linalg.norm(v)) if norm == "l2" else (lambda v: np.abs(v).sum())
    best = np.inf
    distinct = False
    for _ in range(trials):
        x, x2 = sampler(rng), sampler(rng)
        dist = nrm(x - x2)
        if dist == 0:
            continue
        distinct = True
        hx, hx2 = h.value(x), h.value(x2)
        for lam in lams:
            mid = h.value(lam * x + (1 - lam) * x2)
            den = 0.5 * lam * (1 - lam) * dist ** 2
            q = (lam * hx + (1 - lam) * hx2 - mid) / den
            err = 8 * np.finfo(float).eps * (abs(hx) + abs(hx2) + abs(mid)) / den
            best = min(best, q + err)
    if not distinct:
        return 1.0
    return float(best)


def box_sampler(box):
    box = np.asarray(box, dtype=float)
    lo, hi = box[:, 0], box[:, 1]
    return lambda rng: lo + (hi - lo) * rng.random(lo.shape[0])


# ---------------------------------------------------------------- distance to bd dom h*


def _orthant_sign(h):
    """dom h* is {s*u > 0} (up to boundary) for these kinds; None for R^n."""
    if isinstance(h, (LogBarrier, NegPower)):
        return -1.0
    if isinstance(h, SumExp):
        return 1.0
    if h.constraint_kind != "none" or h.kind in ("entropy", "quadratic"):
        return None
    raise CapabilityError(f"no boundary description for {h.kind}")


def _sublevel_floor(p: CompositeProblem, sbar0):
    """Lower bound on (A^T y)_i over {y : D(y) <= D(sbar0)} for the log barrier.

    Write t = A^T y. On Q each t_k is at most M_k (the largest vertex value),
    and each term -b_k ln t_k + const_k is decreasing in t_k, so on the
    sublevel set -b_i ln t_i <= D(sbar0) - min f* - sum_{k != i} phi_k(M_k) - const_i.
    """
    h = p.h
    f = p.f
    if not isinstance(h, LogBarrier) or not hasattr(f, "conj_lower"):
        return None
    D0 = p.dual(np.asarray(sbar0, dtype=float))
    if not np.isfinite(D0):
        raise UsageError("sbar0 is not dual feasible")
    Y = f.conj_domain_vertices()
    T = Y @ p.A.matrix  # rows: A^T y at the vertices
    M = T.max(axis=0)
    if np.any(M <= 0):
        return None
    b = h.b
    const = b * np.log(b) - b
    phiM = -b * np.log(M) + const
    R = D0 - f.conj_lower() - (phiM.sum() - phiM) - const
    R = R + 1e-12 * (1.0 + np.abs(R))  # round up, keeps the bound conservative
    return np.exp(-R / b)


def delta_lower(p: CompositeProblem, sbar0=None) -> DeltaBound | None:
    """Lower bound on the distance from the dual iterate image to bd dom h*.

    Always available: dist(U, bd dom h*), computed over the vertices of U.
    For a sign-orthant domain the distance of a point u to the boundary is
    min_i |u_i| in any l_p norm, so the bound is the smallest |u_i| over
    vertices. It is zero whenever U touches the boundary.

    With ``sbar0`` (and a log barrier h with max-type f) a sharper bound is
    taken from the dual sublevel set {D <= D(sbar0)}, which contains every
    dual iterate of the dual-monotone method; it stays positive when U
    touches the boundary. Returns None when dom h* is all of R^n.
    """
    sign = _orthant_sign(p.h)
    if sign is None:
        return None
    V = u_vertices(p)
    floor = np.maximum(sign * V, 0.0).min(axis=0)
    route = "vertices of U"
    if sbar0 is not None:
        sub = _sublevel_floor(p, sbar0)
        if sub is not None and np.any(sub > floor):
            floor = np.maximum(floor, sub)
            route = "dual sublevel set"
    return DeltaBound(float(floor.min()), route, floor)


def enlarged_iterate_box(p: CompositeProblem, delta: DeltaBound, r: float) -> np.ndarray:
    """Coordinate hull of grad h* over the r-enlarged sublevel image (log barrier).

    Every u in that image has -u_i in [floor_i, M_i]; enlarging by r in a norm
    dominating l_inf keeps -u_i in [floor_i - r, M_i + r], and grad h*(u)_i =
    b_i / (-u_i) maps this to [b_i/(M_i + r), b_i/(floor_i - r)].
    """
    if not isinstance(p.h, LogBarrier):
        raise CapabilityError("enlarged box implemented for the log barrier")
    if not 0 < r < delta.value:
        raise UsageError("need 0 < r < delta")
    M = (-u_vertices(p)).max(axis=0)
    b = p.h.b
    return np.column_stack([b / (M + r), b / (delta.coord_floor - r)])


# ---------------------------------------------------------------- spot checks


@dataclass
class SpotCheck:
    passed: bool
    worst_ratio: float
    pair: tuple | None = None


def smoothness_spot_check(h: ProxFunction, sampler, mu, trials=500, rng=None,
                          norms: NormPair | None = None) -> SpotCheck:
    """Check ||grad h*(u1) - grad h*(u2)|| <= ||u1 - u2||_* / mu on sampled pairs."""
    rng = rng if rng is not None else np.random.default_rng(0)
    norms = norms if norms is not None else NormPair.euclidean()
    worst, bad = 0.0, None
    for _ in range(trials):
        u1, u2 = sampler(rng), sampler(rng)
        lhs = norms.primal(h.conj_grad(u1) - h.conj_grad(u2))
        du = norms.dual(u1 - u2)
        if du > 0:
            worst = max(worst, lhs * mu / du)
        if lhs > du / mu + 1e-9:
            bad = (u1, u2)
            return SpotCheck(False, lhs * mu / du, bad)
    return SpotCheck(True, worst)


def hull_sampler(V):
    """Random convex combinations of the rows of V (flat Dirichlet weights)."""
    V = np.asarray(V, dtype=float)
    return lambda rng: rng.dirichlet(np.ones(V.shape[0])) @ V


@dataclass
class SequenceCheck:
    passed: bool
    violations: list
    a: np.ndarray
    b: np.ndarray


def verify_sequence_lemma(Aconst, k0, profile="random", horizon=10_000, rng=None,
                          a0=None, c=3.0, d=1.0) -> SequenceCheck:
    """Simulate a_{k+1} <= a_k - tau_k b_k + (A/2) tau_k^2 with b_k >= a_k >= 0.

    The profile picks b_k in [a_k, min(c a_k + d, (a_k + A tau^2/2)/tau)], the
    upper end keeping a_{k+1} >= 0: ``tight`` takes b_k = a_k, ``loose`` the
    upper end, ``random`` a uniform draw, and ``slack`` a uniform draw followed
    by a random decrease of a_{k+1} (strict inequality in the recursion).
    Checks, for k0+1 <= k <= horizon,

        a_k <= (k0(k0+1) a_k0 + 2A(k-k0)) / (k(k+1))
        min_{floor((k+k0)/2) <= i <= k-1} b_i
            <= 12(k0+1)^2 a_k0 / ((k-k0)(k+k0)) + 26A/(k+k0)
    """
    from collections import deque

    rng = rng if rng is not None else np.random.default_rng(0)
    A = float(Aconst)
    k0 = int(k0)
    if A < 0 or k0 < 0:
        raise UsageError("need A >= 0 and k0 >= 0")
    a = np.zeros(horizon + 1)
    b = np.zeros(horizon + 1)
    a[k0] = float(rng.exponential(5.0)) if a0 is None else float(a0)
    for k in range(k0, horizon):
        tau = 2.0 / (k + 2)
        upper = min(c * a[k] + d, (a[k] + 0.5 * A * tau * tau) / tau)
        upper = max(upper, a[k])
        if profile == "tight":
            bk = a[k]
        elif profile == "loose":
            bk = upper
        else:
            bk = a[k] + (upper - a[k]) * rng.random()
        b[k] = bk
        nxt = a[k] - tau * bk + 0.5 * A * tau * tau
        if profile == "slack":
            nxt *= rng.random()
        a[k + 1] = max(nxt, 0.0)
    violations = []
    base = k0 * (k0 + 1) * a[k0]
    window = deque()  # indices with increasing b values
    lo_idx = k0
    for k in range(k0 + 1, horizon + 1):
        rhs1 = (base + 2 * A * (k - k0)) / (k * (k + 1))
        if a[k] > rhs1 * (1 + 1e-12) + 1e-300:
            violations.append((k, "a", a[k], rhs1))
        # sliding-window minimum of b over [floor((k+k0)/2), k-1]
        i = k - 1
        while window and b[window[-1]] >= b[i]:
            window.pop()
        window.append(i)
        lo_idx = (k + k0) // 2
        while window[0] < lo_idx:
            window.popleft()
        rhs2 = 12 * (k0 + 1) ** 2 * a[k0] / ((k - k0) * (k + k0)) + 26 * A / (k + k0)
        if b[window[0]] > rhs2 * (1 + 1e-12) + 1e-300:
            violations.append((k, "b", b[window[0]], rhs2))
    return SequenceCheck(not violations, violations, a, b)


# ---------------------------------------------------------------- full report


def certify(p: CompositeProblem, sbar0=None, rng=None, mu_trials=1000) -> CertificateReport:
    """Compute every constant the convergence bounds need.

    If U lies inside int dom h*, the modulus is certified on the iterate box
    (scope ``S_bar``). Otherwise, when ``sbar0`` yields a positive distance
    bound delta for the log barrier, it is certified on the box of the
    enlarged sublevel image with r = delta/2 (scope ``S_r``).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    notes = []
    diam = diam_U(p)
    a2 = check_assumption2(p)
    a3 = {"open": bool(p.h.conjugate_domain_open), "rationale": p.h.assumption3_rationale}
    try:
        norm = _norm_key(p.norms)
    except CapabilityError as exc:
        norm = None
        notes.append(str(exc))

    delta = None
    try:
        delta = delta_lower(p, None if a2 else sbar0)
    except CapabilityError as exc:
        notes.append(str(exc))

    box, scope, mu_lo, level = None, None, None, None
    k_ub = None
    if delta is None:
        delta_val = None
        if p.h.conjugate_domain_open:
            k_ub = 0  # dom h* = R^n: trial points are always feasible
    else:
        delta_val = delta.value
        if delta_val > 0:
            k_ub = k_threshold_bound(diam, delta_val / 2.0)
        else:
            notes.append("delta lower bound is 0: constants for the general "
                          "dual-monotone bound unavailable")
    if a2 and p.h.separable:
        box = iterate_box(p)
        scope = "S_bar"
    elif not a2 and delta is not None and delta.value > 0 and isinstance(p.h, LogBarrier):
        box = enlarged_iterate_box(p, delta, delta.value / 2.0)
        scope = "S_r"
        if delta.route == "dual sublevel set":
            level = float(p.dual(np.asarray(sbar0, dtype=float)))
    elif not a2:
        notes.append("assumption 2 fails and no positive delta bound: modulus not certified")
    else:
        notes.append("iterate box needs a separable h")

    mu_up = None
    if box is not None and norm is not None:
        try:
            mu_lo = mu_lower_separable(p.h, box, norm)
        except (CertificateError, CapabilityError) as exc:
            notes.append(str(exc))
            mu_lo = None
        if np.all(np.isfinite(box)):
            mu_up = mu_upper_sampled(p.h, box_sampler(box), mu_trials, rng, norm)
    return CertificateReport(
        mu_lower=mu_lo, mu_upper=mu_up, diam_u=diam, assumption2=a2, assumption3=a3,
        delta_lower=delta_val, ell_upper=diam, k_threshold_ub=k_ub, iterate_box=box,
        mu_scope=scope if mu_lo is not None else None, notes=notes,
        sublevel_level=level)

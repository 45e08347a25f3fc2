"""Dual averaging with dual monotonicity.

The dual iterate sbar is only ever replaced by the trial point
shat = (1 - tau_k) sbar + tau_k g, tau_k = 2/(k+2), when D(shat) < D(sbar)
exactly as computed. An infeasible trial has D = +inf and is rejected, so the
method stays well-defined even when -A^T Q touches the boundary of dom h*.
The primal point is x = grad h*(-A^T sbar) and only changes on accepted
("active") steps; rejected steps are "idle".
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .da import BOUND_SLACK, SolverRun, StepSchedule
from .errors import DomainError, UsageError
from .problem import CompositeProblem
from .prox import EXTERIOR, INTERIOR, Unbounded
from .spaces import as_vector


def k_threshold_bound(ell_ub, r) -> int:
    """Iteration count after which every trial point is dual feasible.

    Returns 2 * ceil(max(ell_ub / r - 1, 0)).
    """
    if not r > 0:
        raise UsageError("r must be positive")
    if ell_ub < 0:
        raise UsageError("ell_ub must be nonnegative")
    return 2 * int(math.ceil(max(ell_ub / r - 1.0, 0.0)))


@dataclass
class MdaRecord:
    k: int
    accepted: int
    P_x: float
    P_xhat: float
    D_sbar: float
    min_gap: float
    best_gap: float
    bound_min_gap: float | None = None
    bound_best_gap: float | None = None

    FIELDS = ("k", "accepted", "P_x", "P_xhat", "D_sbar", "min_gap", "best_gap",
              "bound_min_gap", "bound_best_gap")

    def as_row(self):
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class MdaState:
    """State after k steps.

    ``min_gap`` is min_{i <= k} P(x^i) + D(sbar^i) (inclusive of k) and
    (best_x, best_P) the best primal point among x^0..x^k.
    """

    k: int
    sbar: np.ndarray
    D_sbar: float
    x: np.ndarray
    g: np.ndarray
    P_x: float
    best_x: np.ndarray
    best_P: float
    min_gap: float
    active: int = 0
    idle: int = 0
    record: MdaRecord | None = None


@dataclass
class WarmStart:
    sbar0: np.ndarray
    x_minus1: np.ndarray
    fallback: bool


def _new_counters():
    return {"prox": 0, "subgradient": 0, "dual": 0, "primal": 0}


def _check_dual_point(p: CompositeProblem, y, counters=None):
    """Raise UsageError unless y is in dom D (interior for open conjugate domains)."""
    if not np.isfinite(p.f.conj_value(y)):
        raise UsageError("y ∉ dom f*")
    u = -(p.A.matrix.T @ y)
    verdict = p.h.classify(u)
    if verdict == EXTERIOR or (verdict != INTERIOR and p.h.conjugate_domain_open):
        raise UsageError("−A*y ∉ int dom h*")
    D = p.dual(y)
    if counters is not None:
        counters["dual"] += 1
    if not np.isfinite(D):
        raise UsageError("−A*y ∉ int dom h*")
    return D


def _primal_point(p, sbar, counters):
    x = p.h.subproblem(p.A.matrix.T @ sbar, 1.0)
    counters["prox"] += 1
    if isinstance(x, Unbounded):
        return x, None, None
    z = p.A.matrix @ x
    if not p.f.in_domain(z):
        raise DomainError("A x is outside dom f")
    g = p.f.subgradient(z)
    counters["subgradient"] += 1
    Px = p.f.value(z) + p.h.value(x)
    counters["primal"] += 1
    return x, g, Px


def mda_prestart(p: CompositeProblem, sbar0, counters=None) -> MdaState:
    """State at k = 0: x^0 = grad h*(-A^T sbar0), g^0 a subgradient at A x^0."""
    c = counters if counters is not None else _new_counters()
    sbar0 = as_vector(sbar0, p.m, "sbar0")
    D0 = _check_dual_point(p, sbar0, c)
    x, g, Px = _primal_point(p, sbar0, c)
    if isinstance(x, Unbounded):
        raise UsageError("−A*y ∉ int dom h*")
    rec = MdaRecord(0, 1, Px, Px, D0, Px + D0, Px + D0)
    return MdaState(0, sbar0, D0, x, g, Px, x, Px, Px + D0, record=rec)


def mda_step(state: MdaState, p: CompositeProblem, counters=None) -> MdaState:
    """One step: accept the trial dual point iff it strictly lowers D."""
    c = counters if counters is not None else _new_counters()
    k = state.k
    tau = StepSchedule.tau(k)
    shat = (1.0 - tau) * state.sbar + tau * state.g
    Dhat = p.dual(shat)
    c["dual"] += 1
    if Dhat < state.D_sbar:
        x, g, Px = _primal_point(p, shat, c)
        if isinstance(x, Unbounded):
            # D(shat) finite but no minimizer: only possible on a closed conjugate domain
            raise DomainError(f"accepted dual point has no primal image: {x.reason}")
        sbar, D = shat, Dhat
        active, idle, acc = state.active + 1, state.idle, 1
    else:
        sbar, D, x, g, Px = state.sbar, state.D_sbar, state.x, state.g, state.P_x
        active, idle, acc = state.active, state.idle + 1, 0
    best_x, best_P = state.best_x, state.best_P
    if Px < best_P:
        best_x, best_P = x, Px
    min_gap = min(state.min_gap, Px + D)
    rec = MdaRecord(k + 1, acc, Px, best_P, D, min_gap, best_P + D)
    return MdaState(k + 1, sbar, D, x, g, Px, best_x, best_P, min_gap, active, idle, rec)


def mda_warm_prestart(p: CompositeProblem, s_minus1) -> WarmStart:
    """Pick sbar0 as a subgradient of f at A x^{-1}, x^{-1} = grad h*(-A^T s_minus1).

    Falls back to ``s_minus1`` (with ``fallback=True``) if that subgradient is
    not a feasible dual point.
    """
    s_minus1 = as_vector(s_minus1, p.m, "s_minus1")
    _check_dual_point(p, s_minus1)
    x = p.h.subproblem(p.A.matrix.T @ s_minus1, 1.0)
    if isinstance(x, Unbounded):
        raise UsageError("−A*y ∉ int dom h*")
    z = p.A.matrix @ x
    if not p.f.in_domain(z):
        raise DomainError("A x^{-1} is outside dom f")
    g = p.f.subgradient(z)
    try:
        _check_dual_point(p, g)
    except UsageError:
        return WarmStart(s_minus1.copy(), x, True)
    return WarmStart(g, x, False)


# ---------------------------------------------------------------- bounds


class _Bounds:
    """Right-hand sides of the two gap bounds, from certified constants only.

    With U inside int dom h* (scope S_bar), for the inclusive running minimum
    at step k and the best-iterate gap:

        min_{i<=k} gap_i <= 12 G0 / (k+1)^2 + 26 l^2 / (mu (k+1))
        P(xhat^k) + D(sbar^k) <= 2 l^2 / (mu (k+1))                    (k >= 1)

    where G0 >= D(sbar^0) - D_* and l = diam(U). Otherwise (scope S_r) the
    same argument started at K = k_threshold_ub gives, for k >= K,

        min_{i<=k} gap_i <= 12 (K+1)^2 GK / ((k+1-K)(k+1+K)) + 26 l^2 / (mu (k+1+K))
        P(xhat^k) + D(sbar^k) <= K(K+1)/(k(k+1)) (P(xhat^K) + D(sbar^K))
                                 + 2 l^2 (k-K) / (mu k (k+1))          (k >= max(K,1))

    with GK >= D(sbar^K) - D_*. Lower bounds on D_* come from the reference
    estimate minus its tolerance, or from weak duality D_* >= -P(x^0).
    """

    def __init__(self, cert, D0, P0, d_star):
        self.cert = cert
        self.ell2 = cert.ell_upper ** 2
        self.mu = cert.mu_lower
        self.scope = cert.mu_scope
        self.K = 0 if self.scope == "S_bar" else cert.k_threshold_ub
        lb = -P0
        if d_star is not None:
            est, tol = d_star
            lb = max(lb, est - tol)
        self.dstar_lb = lb
        self.G0 = max(D0 - lb, 0.0)
        self.GK = None
        self.best_gap_K = None

    def at(self, state: MdaState):
        k = state.k
        K = self.K
        if k == K and self.GK is None:
            self.GK = max(state.D_sbar - self.dstar_lb, 0.0)
            self.best_gap_K = state.best_P + state.D_sbar
        if k < K:
            return None, None
        c = self.ell2 / self.mu
        if self.scope == "S_bar":
            bmin = 12.0 * self.G0 / (k + 1) ** 2 + 26.0 * c / (k + 1)
            bbest = 2.0 * c / (k + 1) if k >= 1 else None
            return bmin, bbest
        bmin = (12.0 * (K + 1) ** 2 * self.GK / ((k + 1 - K) * (k + 1 + K))
                + 26.0 * c / (k + 1 + K))
        bbest = None
        if k >= max(K, 1):
            bbest = K * (K + 1) / (k * (k + 1)) * self.best_gap_K + 2.0 * c * (k - K) / (k * (k + 1))
        return bmin, bbest


def _usable(cert, D0):
    if cert is None or cert.mu_lower is None or cert.mu_scope is None:
        return False
    if cert.mu_scope == "S_bar":
        return bool(cert.assumption2)
    # S_r constants are tied to the sublevel set they were computed for
    level = getattr(cert, "sublevel_level", None)
    return cert.k_threshold_ub is not None and level is not None and D0 <= level


def mda_run(p: CompositeProblem, sbar0, K, certificate=None, d_star=None,
            keep_iterates=False) -> SolverRun:
    """Run K steps and collect the trace.

    Parameters
    ----------
    certificate : CertificateReport, optional
        When its constants cover the iterates (see ``certify``), each record
        carries the two bound values and violations go to ``run.violations``.
    d_star : (estimate, tol), optional
        Reference value of the dual optimum; only ``estimate - tol`` is used.
    """
    K = int(K)
    if K < 1:
        raise UsageError("K must be at least 1")
    t0 = time.perf_counter()
    counters = _new_counters()
    run = SolverRun("mda", counters=counters)
    state = mda_prestart(p, sbar0, counters)
    bounds = _Bounds(certificate, state.D_sbar, state.P_x, d_star) \
        if _usable(certificate, state.D_sbar) else None
    if keep_iterates:
        run.iterates = [state.x]

    def attach(st):
        if bounds is None:
            return
        bmin, bbest = bounds.at(st)
        rec = st.record
        rec.bound_min_gap, rec.bound_best_gap = bmin, bbest
        for name, lhs, rhs in (("min_gap", rec.min_gap, bmin), ("best_gap", rec.best_gap, bbest)):
            if rhs is not None and not lhs <= rhs + BOUND_SLACK * (1.0 + abs(rhs)):
                run.violations.append((rec.k, name, lhs, rhs))

    attach(state)
    run.records.append(state.record)
    for _ in range(K):
        state = mda_step(state, p, counters)
        attach(state)
        run.records.append(state.record)
        if keep_iterates:
            run.iterates.append(state.x)
    run.final_state = replace(state, record=None)
    run.wall_time = time.perf_counter() - t0
    return run

"""Catalog of prox-functions h with exact subproblem and conjugate oracles.

Every kind provides

* ``value(x)``: h(x), +inf outside the domain;
* ``subproblem(u, beta)``: argmin_x <u, x> + beta*h(x), or an ``Unbounded``
  marker when no minimizer exists;
* ``conj_value(u)`` / ``conj_grad(u)``: h*(u) and its gradient;
* ``classify(u)``: where u sits relative to dom h*.

The identity ``subproblem(u, beta) == conj_grad(-u / beta)`` holds wherever
both sides are defined.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax, xlogy

from .errors import CapabilityError, DomainError, UsageError
from .spaces import as_vector, project_simplex

INTERIOR, BOUNDARY, EXTERIOR = "interior", "boundary", "exterior"


@dataclass(frozen=True)
class Unbounded:
    """The subproblem has no minimizer; `coords` lists the offending indices."""

    reason: str
    coords: tuple = ()

    def __bool__(self):
        return False


# ---------------------------------------------------------------- constraints


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray
    kind: str = "box"

    def to_dict(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class Simplex:
    kind: str = "simplex"

    def to_dict(self):
        return {"kind": "simplex"}


@dataclass(frozen=True)
class ShiftedOrthant:
    """The set {x : x >= c}."""

    c: np.ndarray
    kind: str = "shifted_orthant"

    def to_dict(self):
        return {"kind": "shifted_orthant", "c": self.c.tolist()}


def make_constraint(d, n):
    """Build a constraint from its JSON fragment (None or kind 'none' -> None)."""
    if d is None or d.get("kind", "none") == "none":
        return None
    kind = d["kind"]
    if kind == "box":
        lo, hi = as_vector(d["lo"], n, "lo"), as_vector(d["hi"], n, "hi")
        if np.any(lo > hi):
            raise UsageError("box has lo > hi")
        return Box(lo, hi)
    if kind == "simplex":
        return Simplex()
    if kind == "shifted_orthant":
        return ShiftedOrthant(as_vector(d["c"], n, "c"))
    raise UsageError(f"unknown constraint kind {kind!r}")


# ---------------------------------------------------------------- base class


class ProxFunction:
    """Common interface; concrete kinds below."""

    kind = "abstract"
    admitted = ("none",)
    conjugate_domain_open = True
    affine_attaining = True
    legendre = True
    very_strictly_convex = True
    # why the conjugate domain is (or is not) open
    assumption3_rationale = ""

    def __init__(self, n, constraint=None):
        if int(n) < 1:
            raise UsageError("dimension must be positive")
        self.n = int(n)
        ckind = "none" if constraint is None else constraint.kind
        if ckind not in self.admitted:
            raise UsageError(
                f"{self.kind} with constraint {ckind!r} has no closed-form subproblem")
        self.constraint = constraint
        if constraint is not None:
            self.legendre = False

    @property
    def constraint_kind(self):
        return "none" if self.constraint is None else self.constraint.kind

    @property
    def separable(self):
        return self.constraint_kind != "simplex"

    def in_domain(self, x):
        return bool(np.isfinite(self.value(x)))

    def _in_constraint(self, x, tol=1e-12):
        c = self.constraint
        if c is None:
            return True
        if c.kind == "box":
            return bool(np.all(x >= c.lo - tol) and np.all(x <= c.hi + tol))
        if c.kind == "simplex":
            return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= 1e-9)
        return bool(np.all(x >= c.c - tol))

    def classify(self, u):
        return INTERIOR

    def hessian_floor(self, lo, hi):
        """Per-coordinate lower bound of the Hessian diagonal over [lo, hi]."""
        raise CapabilityError(f"no Hessian bound for {self.kind}")

    def params(self):
        return {"n": self.n}

    def to_dict(self):
        return {"kind": self.kind, "params": self.params(),
                "constraint": {"kind": "none"} if self.constraint is None
                else self.constraint.to_dict()}

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, constraint={self.constraint_kind})"


def _require_interior(h, u):
    verdict = h.classify(u)
    if verdict != INTERIOR:
        bad = _bad_coords(h, u)
        raise DomainError(f"{h.kind}: u is {verdict} to dom h* at coordinate(s) {bad}")


def _bad_coords(h, u):
    if isinstance(h, LogBarrier) or isinstance(h, NegPower):
        return tuple(int(i) for i in np.flatnonzero(u >= 0))
    if isinstance(h, SumExp):
        return tuple(int(i) for i in np.flatnonzero(u <= 0))
    return ()


# ---------------------------------------------------------------- kinds


class LogBarrier(ProxFunction):
    """h(x) = -sum b_i ln x_i on x > 0."""

    kind = "log_barrier"
    assumption3_rationale = (
        "log barrier is affine attaining: every bounded-below linear tilt has a "
        "minimizer, hence dom h* = {u < 0} is open")

    def __init__(self, b, constraint=None):
        b = as_vector(b, name="b")
        if np.any(b <= 0):
            raise UsageError("log_barrier weights must be positive")
        super().__init__(b.shape[0], constraint)
        self.b = b
        self._const = float(np.sum(xlogy(b, b) - b))

    def params(self):
        return {"b": self.b.tolist()}

    def value(self, x):
        if np.any(x <= 0):
            return np.inf
        return float(-np.dot(self.b, np.log(x)))

    def subproblem(self, u, beta):
        if np.any(u <= 0):
            return Unbounded("linear term must be positive in every coordinate",
                             tuple(int(i) for i in np.flatnonzero(u <= 0)))
        return beta * self.b / u

    def conj_value(self, u):
        if np.any(u >= 0):
            return np.inf
        return float(-np.dot(self.b, np.log(-u)) + self._const)

    def conj_grad(self, u):
        _require_interior(self, u)
        return -self.b / u

    def classify(self, u):
        if np.any(u > 0):
            return EXTERIOR
        if np.any(u == 0):
            return BOUNDARY
        return INTERIOR

    def hessian_floor(self, lo, hi):
        if not np.all(np.isfinite(hi)):
            raise CapabilityError("unbounded box")
        return self.b / hi ** 2


class Entropy(ProxFunction):
    """h(x) = sum x_i ln x_i - x_i on x >= 0 (optionally on the simplex or x >= c)."""

    kind = "entropy"
    admitted = ("none", "simplex", "shifted_orthant")
    assumption3_rationale = (
        "entropy is affine attaining (coercive after any linear tilt), hence "
        "dom h* = R^n is open")

    def __init__(self, n, constraint=None):
        super().__init__(n, constraint)
        if self.constraint_kind == "shifted_orthant" and np.any(constraint.c < 0):
            raise UsageError("shifted_orthant base point must be nonnegative for entropy")

    def value(self, x):
        if np.any(x < 0) or not self._in_constraint(x):
            return np.inf
        return float(np.sum(xlogy(x, x) - x))

    def subproblem(self, u, beta):
        ck = self.constraint_kind
        if ck == "simplex":
            return softmax(-u / beta)
        x = np.exp(-u / beta)
        if ck == "shifted_orthant":
            x = np.maximum(x, self.constraint.c)
        return x

    def conj_value(self, u):
        ck = self.constraint_kind
        if ck == "simplex":
            return float(logsumexp(u) + 1.0)
        if ck == "shifted_orthant":
            x = self.conj_grad(u)
            return float(np.dot(u, x) - np.sum(xlogy(x, x) - x))
        return float(np.sum(np.exp(u)))

    def conj_grad(self, u):
        ck = self.constraint_kind
        if ck == "simplex":
            return softmax(u)
        x = np.exp(u)
        if ck == "shifted_orthant":
            x = np.maximum(x, self.constraint.c)
        return x

    def hessian_floor(self, lo, hi):
        if not np.all(np.isfinite(hi)):
            raise CapabilityError("unbounded box")
        return 1.0 / hi


class SumExp(ProxFunction):
    """h(x) = sum exp(x_i); its conjugate is the entropy on x >= 0."""

    kind = "sum_exp"
    conjugate_domain_open = False
    affine_attaining = False
    assumption3_rationale = (
        "sum of exponentials is not affine attaining (inf of exp(x) is not "
        "attained), so dom h* = R^n_+ is closed, not open")

    def value(self, x):
        return float(np.sum(np.exp(x)))

    def subproblem(self, u, beta):
        if np.any(u >= 0):
            return Unbounded("linear term must be negative in every coordinate",
                             tuple(int(i) for i in np.flatnonzero(u >= 0)))
        return np.log(-u / beta)

    def conj_value(self, u):
        if np.any(u < 0):
            return np.inf
        return float(np.sum(xlogy(u, u) - u))

    def conj_grad(self, u):
        _require_interior(self, u)
        return np.log(u)

    def classify(self, u):
        if np.any(u < 0):
            return EXTERIOR
        if np.any(u == 0):
            return BOUNDARY
        return INTERIOR

    def hessian_floor(self, lo, hi):
        if not np.all(np.isfinite(lo)):
            raise CapabilityError("unbounded box")
        return np.exp(lo)


class NegPower(ProxFunction):
    """h(x) = sum x_i^(-p) on x > 0, p > 0.

    The conjugate is h*(v) = -(p+1) p^(-p/(p+1)) sum (-v_i)^(p/(p+1)) on v <= 0,
    whose domain is closed (the tilt with v = 0 is bounded below but has no
    minimizer).
    """

    kind = "neg_power"
    conjugate_domain_open = False
    affine_attaining = False
    assumption3_rationale = (
        "x^(-p) is bounded below but does not attain its infimum, so it is not "
        "affine attaining and dom h* = R^n_- is closed")

    def __init__(self, n, p, constraint=None):
        super().__init__(n, constraint)
        p = float(p)
        if not p > 0 or not np.isfinite(p):
            raise UsageError("neg_power exponent must be positive")
        self.p = p
        self._q = p / (p + 1.0)
        self._coef = (p + 1.0) * p ** (-self._q)

    def params(self):
        return {"n": self.n, "p": self.p}

    def value(self, x):
        if np.any(x <= 0):
            return np.inf
        return float(np.sum(x ** -self.p))

    def subproblem(self, u, beta):
        if np.any(u <= 0):
            return Unbounded("linear term must be positive in every coordinate",
                             tuple(int(i) for i in np.flatnonzero(u <= 0)))
        return (self.p * beta / u) ** (1.0 / (self.p + 1.0))

    def conj_value(self, u):
        if np.any(u > 0):
            return np.inf
        return float(-self._coef * np.sum((-u) ** self._q))

    def conj_grad(self, u):
        _require_interior(self, u)
        return (self.p / -u) ** (1.0 / (self.p + 1.0))

    def classify(self, u):
        if np.any(u > 0):
            return EXTERIOR
        if np.any(u == 0):
            return BOUNDARY
        return INTERIOR

    def hessian_floor(self, lo, hi):
        if not np.all(np.isfinite(hi)):
            raise CapabilityError("unbounded box")
        return self.p * (self.p + 1.0) * hi ** (-self.p - 2.0)


class Quadratic(ProxFunction):
    """h(x) = 0.5*||x||^2, optionally restricted to a box, simplex or x >= c."""

    kind = "quadratic"
    admitted = ("none", "box", "simplex", "shifted_orthant")
    assumption3_rationale = "strongly convex, so dom h* = R^n is open"

    def value(self, x):
        if not self._in_constraint(x):
            return np.inf
        return 0.5 * float(np.dot(x, x))

    def _project(self, v):
        c = self.constraint
        if c is None:
            return v
        if c.kind == "box":
            return np.clip(v, c.lo, c.hi)
        if c.kind == "simplex":
            return project_simplex(v)
        return np.maximum(v, c.c)

    def subproblem(self, u, beta):
        return self._project(-u / beta)

    def conj_value(self, u):
        x = self._project(u)
        return float(np.dot(u, x) - 0.5 * np.dot(x, x))

    def conj_grad(self, u):
        return self._project(u)

    def hessian_floor(self, lo, hi):
        return np.ones(self.n)


# ---------------------------------------------------------------- factories


def log_barrier(b, constraint=None):
    return LogBarrier(b, constraint)


def entropy(n, constraint=None):
    return Entropy(n, constraint)


def sum_exp(n):
    return SumExp(n)


def neg_power(n, p):
    return NegPower(n, p)


def quadratic(n, constraint=None):
    return Quadratic(n, constraint)


def prox_from_dict(d):
    """Build a ProxFunction from its JSON fragment."""
    kind = d.get("kind")
    params = d.get("params", {}) or {}
    try:
        if kind == "log_barrier":
            b = as_vector(params["b"], name="b")
            return LogBarrier(b, make_constraint(d.get("constraint"), b.shape[0]))
        n = int(params["n"])
        con = make_constraint(d.get("constraint"), n)
        if kind == "entropy":
            return Entropy(n, con)
        if kind == "sum_exp":
            return SumExp(n, con)
        if kind == "neg_power":
            return NegPower(n, params["p"], con)
        if kind == "quadratic":
            return Quadratic(n, con)
    except KeyError as exc:
        raise UsageError(f"h.params missing field {exc}") from None
    raise UsageError(f"unknown prox kind {kind!r}")


# ---------------------------------------------------------------- validated API


def prox_subproblem(h: ProxFunction, u, beta):
    """argmin_x <u, x> + beta*h(x), or an ``Unbounded`` marker."""
    u = as_vector(u, h.n, "u")
    beta = float(beta)
    if not beta > 0 or not np.isfinite(beta):
        raise UsageError("beta must be positive and finite")
    return h.subproblem(u, beta)


def conj_value(h: ProxFunction, u) -> float:
    return h.conj_value(as_vector(u, h.n, "u"))


def conj_grad(h: ProxFunction, u) -> np.ndarray:
    return h.conj_grad(as_vector(u, h.n, "u"))


def conj_domain_classify(h: ProxFunction, u) -> str:
    return h.classify(as_vector(u, h.n, "u"))

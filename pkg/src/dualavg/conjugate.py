"""Brute-force conjugate estimates, used as an independent check.

Solvers never call this module. The returned value is the best sampled
<u, x> - phi(x), so it is always a lower bound on phi*(u).
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class ConjugateEstimate:
    value: float
    x: np.ndarray
    tol: float
    stabilized: bool
    warning: str = ""

    def __float__(self):
        return float(self.value)


def numeric_conjugate_oracle(phi, u, lower, upper, budget=20000, transform=None,
                             rng=None) -> ConjugateEstimate:
    """Estimate phi*(u) = sup_x <u, x> - phi(x) from below.

    Parameters
    ----------
    phi : callable
        Value oracle; may return +inf outside its domain.
    u : array_like
        Dual point.
    lower, upper : array_like
        Search box in parameter space t. Points are x = transform(t)
        (identity by default), so e.g. ``transform=np.exp`` searches x > 0 on
        a log scale.
    budget : int
        Rough number of function evaluations. Dimension <= 4 uses a full grid,
        larger dimensions random samples; both are followed by a
        coordinate-wise pattern search.
    transform : callable, optional
    rng : numpy Generator, optional
        Only used in random-sampling mode.

    Returns
    -------
    ConjugateEstimate
        ``value`` is a lower bound on phi*(u). ``tol`` is the size of the last
        successful improvement, a heuristic estimate of the remaining gap.
        ``warning`` is non-empty if the budget ran out or the best point sits
        on the search-box boundary.
    """
    u = np.asarray(u, dtype=float)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), u.shape).copy()
    hi = np.broadcast_to(np.asarray(upper, dtype=float), u.shape).copy()
    if np.any(lo >= hi):
        raise UsageError("empty search box")
    tr = transform if transform is not None else (lambda t: t)
    d = u.shape[0]

    def score(t):
        x = tr(t)
        v = phi(x)
        return -np.inf if not np.isfinite(v) else float(np.dot(u, x) - v)

    evals = 0
    if d <= 4:
        per = max(3, int(round((budget / 2) ** (1.0 / d))))
        axes = [np.linspace(lo[i], hi[i], per) for i in range(d)]
        cand = itertools.product(*axes)
        step = (hi - lo) / (per - 1)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        cand = (lo + (hi - lo) * rng.random(d) for _ in range(budget // 2))
        step = (hi - lo) / 10.0
    best_t, best = None, -np.inf
    for t in cand:
        t = np.asarray(t, dtype=float)
        s = score(t)
        evals += 1
        if s > best:
            best, best_t = s, t
    if best_t is None:
        return ConjugateEstimate(-np.inf, np.full(d, np.nan), np.inf, False,
                                 "no sampled point in the domain")

    # pattern search polish
    last_gain = abs(best) + 1.0
    stabilized = False
    t = best_t.copy()
    while evals < budget:
        improved = False
        for i in range(d):
            for sgn in (1.0, -1.0):
                trial = t.copy()
                trial[i] = np.clip(trial[i] + sgn * step[i], lo[i], hi[i])
                s = score(trial)
                evals += 1
                if s > best:
                    last_gain = s - best
                    best, t, improved = s, trial, True
                    break
        if not improved:
            step = step / 2.0
            if np.all(step <= 1e-13 * (1.0 + np.abs(t))):
                stabilized = True
                break
    warn = ""
    if not stabilized:
        warn = "budget exhausted before the pattern search stabilized"
    elif np.any(np.isclose(t, lo, rtol=0, atol=1e-9)) or np.any(np.isclose(t, hi, rtol=0, atol=1e-9)):
        warn = "best point on the search-box boundary; estimate may be loose"
    if warn:
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
    tol = float(min(last_gain, 1e-6)) if stabilized else float(last_gain)
    return ConjugateEstimate(float(best), tr(t), max(tol, 1e-12 * (1 + abs(best))),
                             stabilized, warn)

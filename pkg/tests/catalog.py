"""Shared catalog of prox kinds with samplers for interior conjugate points."""
import numpy as np

from dualavg.conjugate import numeric_conjugate_oracle

from dualavg.prox import Box, ShiftedOrthant, Simplex, entropy, log_barrier, neg_power, quadratic, sum_exp


def catalog(n=3):
    """(label, h, sampler of interior points of dom h*, oracle search spec)."""
    neg = lambda rng: -rng.uniform(0.2, 3.0, n)
    pos = lambda rng: rng.uniform(0.2, 3.0, n)
    free = lambda rng: rng.uniform(-2.0, 2.0, n)
    return [
        ("log_barrier", log_barrier(np.linspace(1.0, 2.0, n)), neg),
        ("entropy", entropy(n), free),
        ("entropy_simplex", entropy(n, Simplex()), free),
        ("entropy_shifted", entropy(n, ShiftedOrthant(np.full(n, 0.5))), free),
        ("sum_exp", sum_exp(n), pos),
        ("neg_power", neg_power(n, 1.5), neg),
        ("quadratic", quadratic(n), free),
        ("quadratic_box", quadratic(n, Box(np.full(n, -0.5), np.full(n, 1.0))), free),
        ("quadratic_simplex", quadratic(n, Simplex()), free),
        ("quadratic_shifted", quadratic(n, ShiftedOrthant(np.full(n, -0.3))), free),
    ]


def slice_oracle(h, u):
    """Numeric estimate of h*(u) on a 1-D or 2-D search region matching dom h."""
    kind, ck = h.kind, h.constraint_kind
    if ck == "simplex":
        # x = (t, 1 - t): h*(u) = sup_t (u0 - u1) t + u1 - h(t, 1-t)
        phi = lambda t: h.value(np.array([t[0], 1 - t[0]]))
        est = numeric_conjugate_oracle(phi, [u[0] - u[1]], 0.0, 1.0)
        return est.value + u[1], est.tol
    if kind in ("log_barrier", "neg_power", "entropy") and ck == "none":
        est = numeric_conjugate_oracle(h.value, u, -12.0, 6.0, transform=np.exp)
    elif ck == "shifted_orthant":
        est = numeric_conjugate_oracle(h.value, u, h.constraint.c, h.constraint.c + 30.0)
    elif ck == "box":
        est = numeric_conjugate_oracle(h.value, u, h.constraint.lo, h.constraint.hi)
    elif kind == "sum_exp":
        est = numeric_conjugate_oracle(h.value, u, -30.0, 5.0)
    else:
        est = numeric_conjugate_oracle(h.value, u, -20.0, 20.0)
    return est.value, est.tol

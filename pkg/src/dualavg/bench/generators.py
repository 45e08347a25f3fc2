"""Random instance generators.

Randomness comes from numpy's ``default_rng(seed)`` (PCG64 bit generator,
SeedSequence seeding), so a seed reproduces the same instance on any platform
with the same numpy major version.
"""
from __future__ import annotations

import numpy as np

from ..errors import UsageError
from ..objectives import LogPlusMax
from .spec_io import ProblemSpec


def _check_size(m, n):
    if m < 2 or n < 2:
        raise UsageError("need m, n >= 2")


def gen_ptoy(seed, m=4, n=3, positive=True) -> ProblemSpec:
    """max_j <A_j, x> - sum ln x_i with A entries uniform in [0.5, 2].

    With ``positive=False`` the first row and the first column of A are both
    replaced by e_1, so A x^{-1} for x^{-1} = e_1 has its maximum at row 1 and
    -A^T e_1 = -e_1 sits on the boundary of the log-barrier conjugate domain.
    The dual start sbar0 is the uniform simplex point, feasible in both modes
    because every column of A has a positive entry.
    """
    _check_size(m, n)
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.5, 2.0, size=(m, n))
    if positive:
        x_minus1 = np.ones(n)
        kind = "ptoy_positive"
    else:
        A[0, :] = 0.0
        A[:, 0] = 0.0
        A[0, 0] = 1.0
        x_minus1 = np.zeros(n)
        x_minus1[0] = 1.0
        kind = "ptoy_nonneg"
    extras = {"x_minus1": x_minus1.tolist(), "sbar0": (np.ones(m) / m).tolist(),
              "expect_ill_defined": not positive}
    return ProblemSpec(
        name=f"{kind}_seed{seed}", seed=int(seed), A=A,
        f={"kind": "max_coord", "params": {"m": m}},
        h={"kind": "log_barrier", "params": {"b": [1.0] * n}, "constraint": {"kind": "none"}},
        norms={"kind": "euclidean"}, instance_kind=kind, extras=extras)


def gen_example61(seed, m=3, n=3) -> ProblemSpec:
    """-sum ln z_i + max_i z_i composed with z = A x, entropy on {x >= 1}.

    A has entries in (0, 1]. The envelope block describes C = A({x >= 1}) =
    A 1 + cone(columns of A) and the exact Lipschitz constant of f on the
    orthant corner {z >= A 1}, which contains C.
    """
    _check_size(m, n)
    rng = np.random.default_rng(seed)
    A = 1.0 - rng.random((m, n))
    base = A @ np.ones(n)
    L = LogPlusMax(m).lipschitz_above(base)
    extras = {"x_minus1": np.full(n, 2.0).tolist(),
              "envelope": {"C": {"kind": "shifted_cone", "base": base.tolist(), "G": A.tolist()},
                           "L": L, "norm": "l2"}}
    return ProblemSpec(
        name=f"example61_seed{seed}", seed=int(seed), A=A,
        f={"kind": "log_plus_max", "params": {"m": m}},
        h={"kind": "entropy", "params": {"n": n},
           "constraint": {"kind": "shifted_orthant", "c": [1.0] * n}},
        norms={"kind": "euclidean"}, instance_kind="example61", extras=extras)


def envelope_from_spec(spec: ProblemSpec):
    """LipschitzExtension described by an example61 spec."""
    from ..envelope import ConstraintSetC, LipschitzExtension
    from ..objectives import objective_from_dict

    env = spec.extras.get("envelope")
    if env is None:
        raise UsageError(f"{spec.name} has no envelope block")
    return LipschitzExtension(objective_from_dict(spec.f), ConstraintSetC.from_dict(env["C"]),
                              float(env["L"]), env.get("norm", "l2"))

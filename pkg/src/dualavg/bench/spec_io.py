"""ProblemSpec JSON files: loading with diagnostics, canonical writing, building problems.

Floats are written with Python's shortest round-trip repr, so a spec survives
load/save bit-exactly.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ..errors import SchemaError, UsageError
from ..objectives import objective_from_dict
from ..problem import CompositeProblem
from ..prox import prox_from_dict
from ..spaces import NormPair

INSTANCE_KINDS = ("ptoy_positive", "ptoy_nonneg", "example61", "custom")
REQUIRED = ("name", "seed", "A", "f", "h", "norms", "instance_kind")


@dataclass
class ProblemSpec:
    name: str
    seed: int | None
    A: np.ndarray
    f: dict
    h: dict
    norms: dict
    instance_kind: str
    extras: dict = field(default_factory=dict)  # x_minus1, sbar0, expect_ill_defined, envelope

    def to_dict(self):
        d = {"name": self.name, "seed": self.seed, "A": self.A.tolist(), "f": self.f,
             "h": self.h, "norms": self.norms, "instance_kind": self.instance_kind}
        d.update(self.extras)
        return d

    @classmethod
    def from_dict(cls, d, source="<spec>"):
        if not isinstance(d, dict):
            raise SchemaError(f"{source}: top level must be an object")
        missing = [k for k in REQUIRED if k not in d]
        if missing:
            raise SchemaError(f"{source}: missing field(s) {', '.join(missing)}")
        try:
            A = np.array(d["A"], dtype=float)
        except (TypeError, ValueError):
            raise SchemaError(f"{source}: field A must be a numeric matrix") from None
        if A.ndim != 2 or A.size == 0:
            raise SchemaError(f"{source}: field A must be a non-empty row-major matrix")
        for key in ("f", "h", "norms"):
            if not isinstance(d[key], dict) or "kind" not in d[key]:
                raise SchemaError(f"{source}: field {key} must be an object with a kind")
        if d["instance_kind"] not in INSTANCE_KINDS:
            raise SchemaError(f"{source}: field instance_kind must be one of {INSTANCE_KINDS}")
        extras = {k: v for k, v in d.items() if k not in REQUIRED}
        return cls(str(d["name"]), d["seed"], A, d["f"], d["h"], d["norms"],
                   d["instance_kind"], extras)

    def build(self) -> CompositeProblem:
        """The CompositeProblem this spec describes."""
        try:
            f = objective_from_dict(self.f)
            h = prox_from_dict(self.h)
            norms = NormPair.from_dict(self.norms)
            return CompositeProblem(f, self.A, h, norms)
        except UsageError as exc:
            raise SchemaError(f"{self.name}: {exc}") from None

    def vector(self, key, default=None):
        v = self.extras.get(key)
        return default if v is None else np.asarray(v, dtype=float)


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False, allow_nan=True) + "\n"


def write_atomic(path, text: str):
    """Write via a temporary file in the same directory and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_spec(spec: ProblemSpec, path):
    write_atomic(path, dumps(spec.to_dict()))


def load_spec(path) -> ProblemSpec:
    """Read a spec file; SchemaError carries the file, line and field of the problem."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return ProblemSpec.from_dict(d, path)


def committed_spec_path(name) -> str:
    """Path of a spec shipped with the package (e.g. ``ptoy_positive_seed7``)."""
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(here, "data", "specs", f"{name}.json")

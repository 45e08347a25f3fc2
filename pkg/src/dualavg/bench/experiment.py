"""End-to-end runs: certificate, solver, bound checks, CSV/JSON reports."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from ..certificates import certify
from ..da import IterationRecord, da_run
from ..errors import CapabilityError
from ..mda import MdaRecord, mda_run
from .reference import reference_dual_optimum
from .spec_io import dumps, load_spec, write_atomic

EXIT_OK, EXIT_VIOLATION, EXIT_SCHEMA, EXIT_ILL_DEFINED = 0, 1, 2, 3


@dataclass
class RunReport:
    algo: str
    spec_name: str
    certificate: dict
    fields: tuple
    rows: list
    slope: float | None
    violations: int
    wall_time: float
    counters: dict
    ill_defined: dict | None
    exit_code: int
    d_star: tuple | None = None
    extra: dict = field(default_factory=dict)

    def summary(self):
        return {"algo": self.algo, "spec": self.spec_name, "certificate": self.certificate,
                "slope": self.slope, "violations": self.violations,
                "wall_time": self.wall_time, "counters": self.counters,
                "ill_defined": self.ill_defined, "exit_code": self.exit_code,
                "d_star": None if self.d_star is None else list(self.d_star),
                "iterations": len(self.rows), **self.extra}


def fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_csv(fields, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(fields) + "\n")
    for r in rows:
        buf.write(",".join(fmt_cell(v) for v in r) + "\n")
    return buf.getvalue()


def loglog_slope(k, gap, lo=100, hi=None):
    """Least-squares slope of log(gap) against log(k) over lo <= k <= hi."""
    k = np.asarray(k, dtype=float)
    gap = np.asarray(gap, dtype=float)
    hi = k.max() if hi is None else hi
    sel = (k >= lo) & (k <= hi) & (gap > 0) & np.isfinite(gap)
    if sel.sum() < 2:
        return None
    return float(np.polyfit(np.log(k[sel]), np.log(gap[sel]), 1)[0])


def run_experiment(spec_path, algo, K, out_path=None, fmt="csv", expect_ill_defined=None):
    """Run one solver on one spec file and write the reports.

    Exit code: 0 when there are no bound violations and the run was
    well-defined, or ill-definedness was expected and observed; 1 on bound
    violations; 3 when ill-definedness was unexpected, or expected but absent.
    Schema and I/O problems raise (the CLI maps them to 2).
    """
    spec = load_spec(spec_path)
    p = spec.build()
    # a declaration stored in the ProblemSpec concerns plain dual averaging; the dual-monotone
    # method is never ill-defined unless the caller says otherwise
    if expect_ill_defined is None:
        expect = bool(spec.extras.get("expect_ill_defined", False)) and algo == "da"
    else:
        expect = expect_ill_defined
    sbar0 = spec.vector("sbar0", np.ones(p.m) / p.m)
    try:
        cert = certify(p, sbar0 if algo == "mda" else None)
        cert_json = cert.to_json_dict()
    except CapabilityError as exc:
        cert, cert_json = None, {"unavailable": str(exc)}
    d_star = None
    if algo == "da":
        run = da_run(p, spec.vector("x_minus1", np.ones(p.n)), K, cert)
        fields = IterationRecord.FIELDS
        gap_col = "gap_bar"
    elif algo == "mda":
        try:
            ref = reference_dual_optimum(p)
            d_star = (ref.estimate, ref.tol)
        except CapabilityError:
            d_star = None
        run = mda_run(p, sbar0, K, cert, d_star)
        fields = MdaRecord.FIELDS
        gap_col = "min_gap"
    else:
        raise ValueError(f"unknown algo {algo!r}")
    rows = [r.as_row() for r in run.records]
    slope = None
    if run.records:
        slope = loglog_slope(run.column("k"), run.column(gap_col), lo=min(100, K // 10 or 1))
    ill = None
    if run.ill_defined is not None:
        d = run.ill_defined
        ill = {"stage": d.stage, "k": d.k, "dual_vector": d.dual_vector.tolist(),
               "verdict": d.verdict, "reason": d.reason}
    if run.violations:
        code = EXIT_VIOLATION
    elif (ill is not None) != bool(expect):
        code = EXIT_ILL_DEFINED
    else:
        code = EXIT_OK
    report = RunReport(algo, spec.name, cert_json, fields, rows, slope, len(run.violations),
                       run.wall_time, dict(run.counters), ill, code, d_star)
    if algo == "mda" and run.final_state is not None:
        report.extra["active"] = run.final_state.active
        report.extra["idle"] = run.final_state.idle
    if out_path is not None:
        write_report(report, out_path, fmt)
    return report


def write_report(report: RunReport, out_path, fmt="csv"):
    if fmt == "csv":
        write_atomic(out_path, trace_csv(report.fields, report.rows))
        write_atomic(str(out_path) + ".report.json", dumps(report.summary()))
    elif fmt == "json":
        d = report.summary()
        d["fields"] = list(report.fields)
        d["rows"] = [[None if v is None else v for v in r] for r in report.rows]
        write_atomic(out_path, dumps(d))
    else:
        raise ValueError(f"unknown format {fmt!r}")

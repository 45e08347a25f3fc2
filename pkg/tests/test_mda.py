import numpy as np
import pytest
from dataclasses import replace

from dualavg import certify
from dualavg.bench import gen_ptoy, reference_dual_optimum
from dualavg.errors import UsageError
from dualavg.mda import k_threshold_bound, mda_prestart, mda_run, mda_step, mda_warm_prestart


def test_k_threshold_examples():
    assert k_threshold_bound(1, 1) == 0
    assert k_threshold_bound(3, 1) == 4
    assert k_threshold_bound(2.5, 1) == 4
    assert k_threshold_bound(0.3, 1) == 0
    for r in (0, -1):
        with pytest.raises(UsageError):
            k_threshold_bound(1, r)


def test_prestart_feasibility_checks():
    spec = gen_ptoy(3, 4, 3, positive=False)
    p = spec.build()
    st = mda_prestart(p, np.ones(4) / 4)
    assert st.k == 0 and np.isfinite(st.D_sbar)
    with pytest.raises(UsageError, match="y ∉ dom f\\*"):
        mda_prestart(p, [0.5, 0.5, 0.5, 0.0])
    with pytest.raises(UsageError, match="−A\\*y ∉ int dom h\\*"):
        mda_prestart(p, [1.0, 0.0, 0.0, 0.0])


def test_first_trial_is_first_subgradient():
    p = gen_ptoy(2, 4, 3).build()
    st0 = mda_prestart(p, np.ones(4) / 4)
    st1 = mda_step(st0, p)
    if st1.record.accepted:
        assert np.array_equal(st1.sbar, st0.g)
    else:
        assert p.dual(st0.g) >= st0.D_sbar


def test_infeasible_trial_is_idle():
    p = gen_ptoy(3, 4, 3, positive=False).build()
    st0 = mda_prestart(p, np.ones(4) / 4)
    forced = replace(st0, g=np.array([1.0, 0.0, 0.0, 0.0]))  # trial at k=0 is e_1: D = +inf
    st1 = mda_step(forced, p)
    assert st1.record.accepted == 0 and st1.idle == 1 and st1.active == 0
    assert np.array_equal(st1.sbar, st0.sbar) and st1.D_sbar == st0.D_sbar


@pytest.mark.parametrize("seed,positive", [(1, True), (2, True), (3, False), (4, False)])
def test_trace_invariants(seed, positive):
    spec = gen_ptoy(seed, 4, 3, positive=positive)
    p = spec.build()
    st = mda_prestart(p, np.ones(4) / 4)
    counters = {"prox": 0, "subgradient": 0, "dual": 0, "primal": 0}
    st = mda_prestart(p, np.ones(4) / 4, counters)
    prev_min = st.min_gap
    pmins = [st.P_x]
    for _ in range(2000):
        nxt = mda_step(st, p, counters)
        assert nxt.D_sbar <= st.D_sbar  # exact
        assert nxt.active + nxt.idle == nxt.k
        assert nxt.min_gap <= prev_min
        if nxt.record.accepted:
            xr = p.h.conj_grad(-(p.A.matrix.T @ nxt.sbar))
            assert np.max(np.abs(nxt.x - xr)) <= 1e-10 * (1 + np.abs(xr).max())
        pmins.append(min(pmins[-1], nxt.P_x))
        # the running min of gaps dominates (running min of P) + current D
        assert nxt.min_gap >= pmins[-1] + nxt.D_sbar
        prev_min, st = nxt.min_gap, nxt
    assert counters["prox"] == counters["subgradient"] == st.active + 1
    assert counters["dual"] == st.k + 1


def test_run_counters_and_records():
    p = gen_ptoy(5, 4, 3, positive=False).build()
    run = mda_run(p, np.ones(4) / 4, 500)
    fs = run.final_state
    assert fs.active + fs.idle == 500 and len(run.records) == 501
    assert run.counters["prox"] == fs.active + 1
    D = run.column("D_sbar")
    assert np.all(np.diff(D) <= 0)


def test_reference_optimum_below_trace():
    p = gen_ptoy(6, 4, 3, positive=False).build()
    ref = reference_dual_optimum(p)
    run = mda_run(p, np.ones(4) / 4, 2000)
    assert np.all(ref.estimate - ref.tol <= run.column("D_sbar") + 1e-12)


def test_warm_start_feasible_on_certified_toy_and_gap_bound():
    for seed in range(1, 8):
        spec = gen_ptoy(seed, 4, 3)
        p = spec.build()
        cert = certify(p)
        ws = mda_warm_prestart(p, np.ones(4) / 4)
        assert not ws.fallback
        ref = reference_dual_optimum(p)
        lhs = p.dual(ws.sbar0) - (ref.estimate - ref.tol)
        assert lhs <= cert.diam_u ** 2 / (2 * cert.mu_lower) + 1e-12


def test_warm_start_falls_back_on_planted_instance():
    p = gen_ptoy(3, 4, 3, positive=False).build()
    s = np.array([1e-3, 0.333, 0.333, 0.333])  # x^{-1}_1 = 1000 makes row 1 the max
    ws = mda_warm_prestart(p, s)
    assert ws.fallback and np.array_equal(ws.sbar0, s)
    with pytest.raises(UsageError):
        mda_warm_prestart(p, [1.0, 0.0, 0.0, 0.0])


def test_bounds_attached_under_assumption2():
    spec = gen_ptoy(2, 4, 3)
    p = spec.build()
    cert = certify(p)
    ref = reference_dual_optimum(p)
    run = mda_run(p, np.ones(4) / 4, 300, cert, (ref.estimate, ref.tol))
    r = run.records[10]
    c = cert.diam_u ** 2 / cert.mu_lower
    assert abs(r.bound_best_gap - 2 * c / 11) <= 1e-14 * c
    assert run.records[0].bound_best_gap is None
    assert not run.violations


def test_sublevel_bounds_need_matching_start():
    spec = gen_ptoy(3, 4, 3, positive=False)
    p = spec.build()
    s0 = np.ones(4) / 4
    cert = certify(p, s0)
    assert cert.mu_scope == "S_r" and cert.k_threshold_ub is not None
    run = mda_run(p, s0, cert.k_threshold_ub + 50, cert)
    assert run.records[cert.k_threshold_ub].bound_min_gap is not None
    assert run.records[cert.k_threshold_ub - 1].bound_min_gap is None
    # a start with a higher dual value is not covered by this certificate
    worse = np.array([0.7, 0.1, 0.1, 0.1])
    assert p.dual(worse) > p.dual(s0)
    run2 = mda_run(p, worse, 20, cert)
    assert all(r.bound_min_gap is None for r in run2.records)

"""Acceptance criteria; each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from catalog import catalog, slice_oracle
from dualavg import (ConstraintSetC, IllDefined, LipschitzExtension, MaxAffine, certify, conj_grad,
                     conj_value, da_prestart, da_run, eval_FL, k_threshold_bound, mda_prestart,
                     mda_run, mda_step, subgrad_FL_on_C)
from dualavg.bench import (affine_invariance_harness, committed_spec_path, envelope_from_spec,
                           gauge_diameter, gen_ptoy, load_spec, loglog_slope,
                           reference_dual_optimum)
from dualavg.certificates import iterate_box, mu_lower_separable, verify_sequence_lemma
from dualavg.envelope import NotCertified

SEEDS = (1, 2, 3, 4, 5)
K_RATE = 5000


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def slack(bound):
    return 1e-9 * (1.0 + abs(bound))


def brute_diam(p):
    V = p.f.conj_domain_vertices() @ p.A.matrix
    return max(np.linalg.norm(a - b) for a in V for b in V)


_da_cache = {}


def da_trace(seed):
    if seed not in _da_cache:
        spec = gen_ptoy(seed, 4, 3)
        p = spec.build()
        cert = certify(p)
        t0 = time.perf_counter()
        run = da_run(p, spec.vector("x_minus1"), K_RATE, cert)
        _da_cache[seed] = (p, cert, run, time.perf_counter() - t0)
    return _da_cache[seed]


def test_c01_da_gap_bound(capsys):
    worst, slowest, fails = -np.inf, 0.0, []
    for seed in SEEDS:
        p, cert, run, wall = da_trace(seed)
        diam = brute_diam(p)
        mu = mu_lower_separable(p.h, iterate_box(p))
        k = run.column("k")
        bound = 8 * diam ** 2 / (mu * (k + 1))
        gap = np.maximum(run.column("gap_bar"), run.column("gap_tilde"))
        ok = len(k) == K_RATE and np.all(gap <= bound + slack(bound)) and not run.violations
        ok = ok and abs(diam - cert.diam_u) <= 1e-15 and mu == cert.mu_lower and wall <= 10
        worst = max(worst, float(np.max(gap / bound)))
        slowest = max(slowest, wall)
        if not ok:
            fails.append(seed)
    report(capsys, 1, not fails,
           f"gap <= 8 diam^2/(mu (k+1)) for k<=5000 on seeds 1-5; max ratio {worst:.3g}, "
           f"slowest {slowest:.2f}s, failing seeds {fails}")


def test_c02_rate(capsys):
    parts, ok = [], True
    for seed in SEEDS:
        p, _, run, _ = da_trace(seed)
        k, gap = run.column("k"), run.column("gap_bar")
        slope = loglog_slope(k, gap, 100, K_RATE)
        sel = (k >= 100) & (k <= K_RATE)
        P = np.abs(run.column("P_xbar")[sel])
        exact = bool(np.all(np.abs(gap[sel]) <= 1e-12 * (1 + P)))
        good = (slope is not None and slope <= -0.9) or exact
        ok &= good
        parts.append(f"seed {seed}: slope {slope if slope is None else round(slope, 3)}"
                     f"{' (gap at roundoff: exact termination)' if exact else ''}")
    report(capsys, 2, ok, "; ".join(parts))


def test_c03_ill_definedness_witness(capsys):
    spec = load_spec(committed_spec_path("ptoy_nonneg_seed3"))
    p = spec.build()
    e1 = np.zeros(p.n)
    e1[0] = 1.0
    st = da_prestart(p, e1)
    cert = certify(p)
    a2 = cert.assumption2
    ok = (isinstance(st, IllDefined) and not a2
          and np.array_equal(a2.witness, np.eye(p.m)[0]))
    report(capsys, 3, ok, f"da_prestart -> {type(st).__name__}, interior-U check "
           f"{'fail' if not a2 else 'pass'} with witness {None if a2 else a2.witness.tolist()}")


def test_c04_dual_monotonicity(capsys):
    rng = np.random.default_rng(2024)
    bad = []
    for i in range(10):
        positive = i % 2 == 0
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        p = gen_ptoy(100 + i, m, n, positive).build()
        st = mda_prestart(p, np.ones(m) / m)
        D = [st.D_sbar]
        counts_ok = True
        for _ in range(10_000):
            st = mda_step(st, p)
            D.append(st.D_sbar)
            counts_ok &= st.active + st.idle == st.k
        D = np.array(D)
        viol = int(np.sum(D[1:] > D[:-1]))
        if viol or not counts_ok:
            bad.append((i, viol, counts_ok))
    report(capsys, 4, not bad, f"10 instances x 10^4 steps, monotonicity/count failures: {bad}")


def test_c05_best_gap_bound(capsys):
    worst, fails = -np.inf, []
    for seed in SEEDS:
        spec = gen_ptoy(seed, 4, 3)
        p = spec.build()
        cert = certify(p)
        assert cert.assumption2
        diam = brute_diam(p)
        mu = mu_lower_separable(p.h, iterate_box(p))
        run = mda_run(p, np.ones(p.m) / p.m, K_RATE, cert)
        k = run.column("k")[1:]
        best = run.column("best_gap")[1:]
        bound = 2 * diam ** 2 / (mu * (k + 1))
        ok = np.all(best <= bound + slack(bound)) and not run.violations
        worst = max(worst, float(np.max(best / bound)))
        if not ok:
            fails.append(seed)
    report(capsys, 5, not fails, f"P(xhat)+D <= 2 diam^2/(mu (k+1)) for 1<=k<=5000; "
           f"max ratio {worst:.3g}, failing seeds {fails}")


def test_c06_open_domain_bound(capsys):
    spec = load_spec(committed_spec_path("ptoy_nonneg_seed3"))
    p = spec.build()
    s0 = spec.vector("sbar0")
    cert = certify(p, s0)
    if cert.delta_lower is None or cert.delta_lower <= 0:
        report(capsys, 6, False, "constants unavailable: delta_lower = 0 on the committed spec")
    diam = brute_diam(p)
    Kub = k_threshold_bound(diam, cert.delta_lower / 2)
    est, tol = reference_dual_optimum(p)
    K = 10_000
    run = mda_run(p, s0, K, cert, (est, tol))
    D = run.column("D_sbar")
    mg = run.column("min_gap")
    mu_r = cert.mu_lower
    k = np.arange(Kub + 1, K + 1)
    bound = (12 * (Kub + 1) ** 2 / ((k - Kub) * (k + Kub)) * (D[Kub] - est + tol)
             + 26 * diam ** 2 / (mu_r * (k + Kub)))
    lhs = mg[k - 1]  # min over i < k
    ok = (Kub == cert.k_threshold_ub and cert.mu_scope == "S_r" and np.all(lhs <= bound + slack(bound))
          and not run.violations)
    report(capsys, 6, ok, f"delta_lb {cert.delta_lower:.4g}, K_ub {Kub}, mu_lb(r) {mu_r:.4g}, "
           f"D_* in [{est - tol:.12g}, {est:.12g}], max lhs/bound {np.max(lhs / bound):.3g} "
           f"over k in [{Kub + 1}, {K}]")


@pytest.mark.filterwarnings("ignore:best point on the search-box boundary")
def test_c07_conjugate_suite(capsys):
    fy_worst, fd_worst, or_bad = 0.0, 0.0, []
    for label, h, sampler in catalog(3):
        rng = np.random.default_rng(7)
        for _ in range(50):
            u = sampler(rng)
            x = conj_grad(h, u)
            fy_worst = max(fy_worst, abs(h.value(x) + conj_value(h, u) - u @ x) / (1 + abs(u @ x)))
            step = 1e-5
            fd = np.array([(conj_value(h, u + step * e) - conj_value(h, u - step * e)) / (2 * step)
                           for e in np.eye(h.n)])
            fd_worst = max(fd_worst, np.linalg.norm(fd - x) / max(np.linalg.norm(x), 1.0))
    for label, h, sampler in catalog(2):
        rng = np.random.default_rng(8)
        for _ in range(3):
            u = sampler(rng)
            exact = conj_value(h, u)
            est, otol = slice_oracle(h, u)
            if est > exact + 1e-9 * (1 + abs(exact)) or exact - est > max(otol, 1e-6) * (1 + abs(exact)):
                or_bad.append(label)
    ok = fy_worst <= 1e-9 and fd_worst <= 1e-5 and not or_bad
    report(capsys, 7, ok, f"10 kinds: Fenchel-Young worst {fy_worst:.2e}, finite-difference "
           f"worst {fd_worst:.2e}, oracle mismatches {or_bad}")


def test_c08_sequence_lemma(capsys):
    rng = np.random.default_rng(88)
    profiles = ("tight", "loose", "random", "slack")
    failures = 0
    for i in range(100):
        A = float(rng.exponential(5.0))
        k0 = int(rng.integers(0, 500))
        res = verify_sequence_lemma(A, k0, profiles[i % 4], 10_000, rng)
        failures += len(res.violations)
    report(capsys, 8, failures == 0, f"100 simulations to horizon 10^4, violations {failures}")


def test_c09_affine_invariance(capsys):
    spec = load_spec(committed_spec_path("ptoy_positive_seed7"))
    p = spec.build()
    devs = [affine_invariance_harness(p, s, 200, spec.vector("x_minus1")).max_deviation
            for s in range(20)]
    rng = np.random.default_rng(9)
    gd = []
    for i in range(20):
        d = 2 + i % 3
        gd.append(gauge_diameter(rng.standard_normal((d + 1 + int(rng.integers(0, 5)), d))))
    gd_err = max(abs(g - 1.0) for g in gd)
    ok = max(devs) <= 1e-8 and gd_err <= 1e-9
    report(capsys, 9, ok, f"20 (M, b): max deviation {max(devs):.2e}; gauge diameter error "
           f"{gd_err:.2e} on 20 sets in dims 2-4")


def test_c10_envelope(capsys):
    ext = envelope_from_spec(load_spec(committed_spec_path("example61_seed1")))
    rng = np.random.default_rng(10)
    ident = max(abs(eval_FL(ext, z).value - ext.f.value(z)) for z in ext.C.sample(rng, 100))
    pts = ext.C.sample(rng, 400) + 3 * rng.standard_normal((400, 3))
    vals = [eval_FL(ext, z) for z in pts]
    tol = max(r.gap for r in vals)
    lip_bad = sum(abs(vals[2 * i].value - vals[2 * i + 1].value)
                  > ext.L * np.linalg.norm(pts[2 * i] - pts[2 * i + 1]) + 2 * tol for i in range(200))
    sub_bad, certified = 0, 0
    for z in ext.C.sample(rng, 5):
        g = subgrad_FL_on_C(ext, z)
        if isinstance(g, NotCertified):
            continue
        certified += 1
        Fz = eval_FL(ext, z)
        for zp in np.vstack([ext.C.sample(rng, 50), ext.C.sample(rng, 50) + 3 * rng.standard_normal((50, 3))]):
            r = eval_FL(ext, zp)
            sub_bad += r.value < Fz.value + g @ (zp - z) - 2 * max(tol, r.gap, Fz.gap, 1e-12)
    ctrl = LipschitzExtension(MaxAffine([[1.0], [-1.0]]), ConstraintSetC.box([0.0], [1.0]), 1.0)
    ctrl_err = abs(eval_FL(ctrl, [-0.5]).value - 0.5)
    ok = ident <= 1e-4 and lip_bad == 0 and sub_bad == 0 and certified > 0 and ctrl_err <= 1e-6
    report(capsys, 10, ok, f"identity err {ident:.1e}, Lipschitz failures {lip_bad}/200 (inner tol "
           f"{tol:.1e}), subgradient failures {sub_bad} over {certified} certified points, "
           f"|x| control err {ctrl_err:.1e}")


def test_c11_strong_duality(capsys):
    K = 10_000
    out = []
    ok = True
    spec = load_spec(committed_spec_path("ptoy_positive_seed7"))
    p = spec.build()
    cert = certify(p)
    run = da_run(p, spec.vector("x_minus1"), K, cert)
    est, tol = reference_dual_optimum(p)
    P_min = float(np.min(run.column("P_xtilde")))
    gap_bound = 8 * cert.diam_u ** 2 / (cert.mu_lower * (K + 1))
    r1 = abs(P_min + est)
    ok &= r1 <= gap_bound + tol
    out.append(f"da/positive |P+D*| {r1:.2e} <= {gap_bound + tol:.2e}")
    spec = load_spec(committed_spec_path("ptoy_nonneg_seed3"))
    p = spec.build()
    s0 = spec.vector("sbar0")
    cert = certify(p, s0)
    est, tol = reference_dual_optimum(p)
    run = mda_run(p, s0, K, cert, (est, tol))
    last = run.records[-1]
    P_min = float(np.min(run.column("P_x")))
    r2 = abs(P_min + est)
    ok &= last.bound_best_gap is not None and r2 <= last.bound_best_gap + tol
    out.append(f"mda/nonneg |P+D*| {r2:.2e} <= {last.bound_best_gap + tol:.2e}")
    report(capsys, 11, bool(ok), "; ".join(out))

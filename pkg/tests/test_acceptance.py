"""End-to-end acceptance gate.

Each test checks one shipping criterion at its stated tolerance and prints
a single PASS/FAIL line (run with ``pytest -s`` to see them all).
"""

import json
import math
import time

import numpy as np

from sadmm import (
    IterateState,
    ProblemInstance,
    SolverConfig,
    SparseRecoverySpec,
    adaptive_beta,
    audit_descent,
    audit_rate_bounds,
    build_metric,
    compliant_beta,
    DoaSpec,
    doa_spectrum,
    gen_doa,
    gen_sparse_recovery,
    half_shrinkage,
    nesterov_gamma_step,
    sadmm_step,
    scalar_prox_oracle,
    smallest_positive_eigenvalue,
    solve,
    zeta_constants,
)
from sadmm.cli import main as cli_main


def report(name: str, ok: bool, detail: str = ""):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name} failed: {detail}"


def test_c1_prox_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_arg = 0.0
    mismatches = 0
    for _ in range(1000):
        x = float(rng.uniform(-10.0, 10.0))
        lam = float(rng.uniform(0.01, 5.0))
        oracle = scalar_prox_oracle(x, lam, "half")
        closed = float(half_shrinkage(np.array([x]), lam)[0])
        arg_ok = abs(oracle - closed) <= 1e-5

        def obj(t):
            return lam * abs(t) ** 0.5 + 0.5 * (t - x) ** 2

        obj_ok = abs(obj(oracle) - obj(closed)) <= 1e-8
        if not (arg_ok or obj_ok):
            mismatches += 1
        worst_arg = max(worst_arg, abs(oracle - closed))
    elapsed = time.perf_counter() - t0
    report(
        "C1 prox oracle equivalence",
        mismatches == 0 and elapsed < 5.0,
        f"mismatches={mismatches}/1000 worst_arg_diff={worst_arg:.2e} "
        f"runtime={elapsed:.2f}s (budget 5s)",
    )


def test_c2_algebraic_identity_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    worst_primal = worst_dual = worst_bound = 0.0
    for trial in range(50):
        l = int(rng.integers(2, 9))
        m = int(rng.integers(2, 13))
        n = int(rng.integers(2, 9))
        A = rng.standard_normal((l, m))
        B = rng.standard_normal((l, n))
        prob = ProblemInstance(
            A=A, B=B, b=rng.standard_normal(l), f_kind="l_half", mu=0.1,
            g_kind="quadratic_ls", c=rng.standard_normal(n),
            L_g=1.0, sigma_B=smallest_positive_eigenvalue(B),
        )
        tau = float(rng.uniform(0.05, 0.9))
        alpha = float(rng.uniform(0.05, 0.95 - tau))
        beta = compliant_beta(prob.L_g, prob.sigma_B, tau, alpha)
        cfg = SolverConfig(tau=tau, alpha=alpha, beta0=beta, adapt_beta=False,
                           epsilon=1e-30, max_iter=1)
        # dual-consistent start makes the dual-difference bound exact from
        # the first step (B^T lam0 = grad g(y0))
        y0 = np.zeros(n)
        lam0 = np.linalg.lstsq(B.T, prob.g_grad(y0), rcond=None)[0]
        state = IterateState(x=np.zeros(m), x_prev=np.zeros(m), y=y0,
                             lam=lam0, beta=beta)
        G = build_metric(prob, beta)
        for _ in range(10):
            theta, gamma = nesterov_gamma_step(state.theta_prev)
            out = sadmm_step(state, prob, cfg, G, gamma, theta_next=theta)
            nxt = out.next
            dlam = nxt.lam - state.lam
            dy = nxt.y - state.y
            scale = 1.0 + float(np.linalg.norm(nxt.lam))
            lhs = prob.A @ nxt.x + prob.B @ state.y - prob.b
            rhs = -(dlam / beta + prob.B @ dy) / (tau + alpha)
            worst_primal = max(worst_primal, np.linalg.norm(lhs - rhs) / scale)
            dual_gap = np.linalg.norm(prob.B.T @ nxt.lam - prob.g_grad(nxt.y))
            worst_dual = max(worst_dual, dual_gap / scale)
            slack = (np.linalg.norm(prob.B.T @ dlam)
                     - prob.L_g * np.linalg.norm(dy))
            worst_bound = max(worst_bound, slack)
            state = nxt
    elapsed = time.perf_counter() - t0
    ok = worst_primal <= 1e-10 and worst_dual <= 1e-10 and worst_bound <= 1e-9
    report(
        "C2 algebraic identity suite",
        ok and elapsed < 10.0,
        f"primal={worst_primal:.2e} dual={worst_dual:.2e} "
        f"bound_slack={worst_bound:.2e} runtime={elapsed:.2f}s (budget 10s)",
    )


def _compliant_reference_run():
    spec = SparseRecoverySpec(l=128, m=384, spikes=20, noise_sigma=0.01,
                              mu_factor=0.1, seed=0)
    prob, _ = gen_sparse_recovery(spec)
    tau, alpha = 0.65, 0.32
    beta = compliant_beta(prob.L_g, prob.sigma_B, tau, alpha)
    cfg = SolverConfig(tau=tau, alpha=alpha, beta0=beta, adapt_beta=False,
                       epsilon=1e-30, max_iter=500)
    x0 = np.zeros(prob.m)
    y0 = np.zeros(prob.n)
    lam0 = prob.c.copy()  # dual-consistent: B^T lam0 = grad g(y0) for B = -I
    summary, trace = solve(prob, cfg, x0=x0, y0=y0, lam0=lam0)
    gamma_max = max(row.gamma for row in trace)
    zetas = zeta_constants(gamma_max, tau, alpha, beta, prob.L_g, prob.sigma_B)
    return prob, beta, summary, trace, zetas, (x0, y0, lam0)


def test_c3_descent_audit():
    t0 = time.perf_counter()
    prob, beta, summary, trace, zetas, _ = _compliant_reference_run()
    descent = audit_descent(trace, zetas, l_beta_init=summary.L_beta_init)
    elapsed = time.perf_counter() - t0
    ok = (len(trace) == 500 and descent.checked == 500
          and not descent.violations and elapsed < 30.0)
    report(
        "C3 descent audit (fixed compliant beta)",
        ok,
        f"beta={beta:.4f} steps={descent.checked} "
        f"violations={len(descent.violations)} "
        f"worst_margin={descent.worst_margin:.2e} runtime={elapsed:.2f}s "
        f"(budget 30s)",
    )


def test_c4_rate_bounds():
    prob, beta, summary, trace, zetas, w0 = _compliant_reference_run()
    rates = audit_rate_bounds(trace, zetas, prob, w0, underline_L=0.0)
    ok = rates.passed and rates.checked == 500
    report(
        "C4 O(1/k) pointwise bounds",
        ok,
        f"C0={rates.c0:.4f} x_viol={len(rates.x_violations)} "
        f"y_viol={len(rates.y_violations)} lam_viol={len(rates.lam_violations)}",
    )


def test_c5_recovery_quality():
    t0 = time.perf_counter()
    spec = SparseRecoverySpec(l=256, m=768, spikes=40, noise_sigma=0.01,
                              mu_factor=0.1, seed=0)
    prob, x_orig = gen_sparse_recovery(spec)
    cfg = SolverConfig(epsilon=1e-10, max_iter=2000)
    summary, _ = solve(prob, cfg, x_orig=x_orig)
    elapsed = time.perf_counter() - t0
    ok = (summary.iterations <= 2000 and summary.l2_error < 0.12
          and summary.final_equ < 1e-8 and elapsed < 60.0)
    report(
        "C5 recovery quality",
        ok,
        f"it={summary.iterations} l2={summary.l2_error:.4f} (<0.12) "
        f"equ={summary.final_equ:.2e} (<1e-8) runtime={elapsed:.2f}s "
        f"(budget 60s)",
    )


def test_c6_regularizer_ordering():
    half_errs, one_errs = [], []
    for seed in range(5):
        spec = SparseRecoverySpec(l=256, m=768, spikes=40, noise_sigma=0.01,
                                  mu_factor=0.01, seed=seed)
        for reg, sink in (("l_half", half_errs), ("l_one", one_errs)):
            prob, x_orig = gen_sparse_recovery(spec, regularizer=reg)
            summary, _ = solve(prob, SolverConfig(epsilon=1e-10, max_iter=2000),
                               x_orig=x_orig)
            sink.append(summary.l2_error)
    med_half = float(np.median(half_errs))
    med_one = float(np.median(one_errs))
    report(
        "C6 regularizer ordering",
        med_half < med_one,
        f"median l_half={med_half:.4f} < median l_one={med_one:.4f} "
        f"over 5 seeds, identical data per pair",
    )


def test_c7_gamma_schedule():
    theta, gamma0 = nesterov_gamma_step(1.0)
    gamma1 = nesterov_gamma_step(theta)[1]
    theta = 1.0
    prev = -1.0
    sup = 0.0
    increasing = True
    for _ in range(100_000):
        theta, gamma = nesterov_gamma_step(theta)
        if gamma <= prev:
            increasing = False
        prev = gamma
        sup = max(sup, gamma)
    ok = gamma0 == 0.0 and increasing and sup < 0.5 and abs(gamma1 - 0.140877) <= 1e-6
    report(
        "C7 momentum schedule",
        ok,
        f"gamma0={gamma0} gamma1={gamma1:.8f} (0.140877 +- 1e-6) "
        f"sup_1e5={sup:.10f} (<0.5) strictly_increasing={increasing}",
    )


def test_c8_adaptive_beta_branches_and_cap():
    spec = SparseRecoverySpec(l=16, m=48, spikes=4, seed=0)
    prob, _ = gen_sparse_recovery(spec)  # L_g = sigma_B = 1
    cfg = SolverConfig(tau=0.65, alpha=0.32)
    grow = adaptive_beta(0.04, 1.0, 0.05, cfg, prob)
    shrink = adaptive_beta(0.04, 0.05, 1.0, cfg, prob)
    hold = adaptive_beta(0.04, 1.0, 0.5, cfg, prob)
    capped = adaptive_beta(10.0, 1.0, 0.001, cfg, prob)
    cap_formula = 1.01 * prob.L_g / (math.sqrt(1.0 - 0.65 - 0.32) * prob.sigma_B)
    ok = (grow == 0.08 and shrink == 0.02 and hold == 0.04
          and abs(capped - cap_formula) <= 1e-5)
    report(
        "C8 adaptive penalty branches and cap",
        ok,
        f"grow={grow} shrink={shrink} hold={hold} cap={capped:.7f} "
        f"(formula {cap_formula:.7f} +- 1e-5)",
    )


def test_c9_doa_desk_scale():
    t0 = time.perf_counter()
    hits = 0
    details = []
    for seed in range(5):
        spec = DoaSpec(sensors=32, grid_size=90,
                       true_doas=(-math.pi / 6, math.pi / 4),
                       snr_db=20.0, seed=seed)
        prob, support = gen_doa(spec)
        summary, _ = solve(prob, SolverConfig(epsilon=1e-10, max_iter=2000))
        mags = doa_spectrum(summary.x, spec.grid_size)
        peaks = sorted(int(i) for i in np.argsort(mags)[::-1][:2])
        hit = peaks == sorted(support)
        hits += hit
        details.append(f"seed{seed}:{'hit' if hit else 'miss'}")
    elapsed = time.perf_counter() - t0
    report(
        "C9 DOA desk scale",
        hits >= 4 and elapsed < 60.0,
        f"hits={hits}/5 (need >=4) [{', '.join(details)}] "
        f"runtime={elapsed:.2f}s (budget 60s)",
    )


def test_c10_byte_identical_traces(tmp_path):
    args = ["solve", "--l", "48", "--m", "144", "--spikes", "8", "--seed", "11",
            "--epsilon", "1e-9", "--max-iter", "400", "--no-plots"]
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli_main(args + ["--out", str(out_a)]) == 0
    assert cli_main(args + ["--out", str(out_b)]) == 0
    bytes_a = (out_a / "trace.csv").read_bytes()
    bytes_b = (out_b / "trace.csv").read_bytes()
    sum_a = json.loads((out_a / "summary.json").read_text())
    report(
        "C10 determinism",
        bytes_a == bytes_b,
        f"trace bytes identical across runs ({len(bytes_a)} bytes, "
        f"{sum_a['it']} iterations)",
    )

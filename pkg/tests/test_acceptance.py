"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single ``PASS``/``FAIL`` line; run with ``pytest -s`` to
see them.
"""

import math
import time

import numpy as np

from specreg import filters, harness, index_fn, operators, theory

RATE_MODEL = {"b": 2, "d": 200, "noise_sd": 0.1,
              "source": {"kind": "power_decay", "R": 1, "exponent": 0.5}}
RATE_GRID = [2 ** k for k in range(8, 14)]
PIECEWISE = {"kind": "piecewise_linear", "knots": [[0, 0], [0.5, 0.1], [1, 1]]}


def report(label, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} [{label}] {detail}")
    assert ok, detail


def rate_config(phi, filt="cutoff", seed=0, **kw):
    return harness.ExperimentConfig(model=dict(RATE_MODEL, phi=phi), filter={"filter": filt},
                                    n_grid=RATE_GRID, replicates=20, seed=seed, **kw)


def test_1_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(50):
        n = int(rng.integers(5, 201))
        d = int(rng.integers(1, 8))
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        lam = float(10 ** rng.uniform(-4, 0))
        kern = operators.linear_kernel() if k % 2 else operators.gaussian_kernel(float(rng.uniform(0.5, 2)))
        est = operators.fit(filters.tikhonov(), lam, operators.eigh(operators.gram(kern, X)), y)
        direct = np.linalg.solve(kern(X, X) + n * lam * np.eye(n), y)
        worst = max(worst, np.linalg.norm(est.coefficients - direct) / np.linalg.norm(direct))
    elapsed = time.perf_counter() - t0
    report("1 oracle equivalence", worst <= 1e-8 and elapsed < 5,
           f"max relative error {worst:.2e} (tol 1e-8), {elapsed:.2f}s (limit 5s)")


def test_2_filter_audit():
    t0 = time.perf_counter()
    tol = 1 + 1e-9
    tik = filters.audit_filter(filters.tikhonov(), nu_list=[1.0])
    cut = filters.audit_filter(filters.spectral_cutoff(), nu_list=[1.0, 2.0, 4.0, 8.0])
    consts = [tik.measured_A, tik.measured_B, tik.measured_D, cut.measured_A, cut.measured_B, cut.measured_D]
    gammas = [tik.measured_gamma[1.0]] + list(cut.measured_gamma.values())
    elapsed = time.perf_counter() - t0
    ok = max(consts) <= tol and max(gammas) <= tol and elapsed < 5
    report("2 filter audit", ok,
           f"max A/B/D {max(consts)!r}, max gamma {max(gammas)!r} (tol 1+1e-9), {elapsed:.2f}s (limit 5s)")


def test_3_lemma_suite():
    t0 = time.perf_counter()
    cordes = theory.check_cordes(10, (0.1, 0.3, 0.5, 0.9), 1000, seed=0, slack=1e-9)
    resolvent = theory.check_resolvent_identity(8, 0.5, (1, 2, 3, 4), 100, seed=0, atol=1e-10)
    lam_grid = np.geomspace(1e-6, 1.0, 60)
    sups = [theory.check_sup_lemma(phi, 1.0, lam_grid)
            for phi in (index_fn.holder(0.5), index_fn.holder(1.0), index_fn.from_config(PIECEWISE))]
    elapsed = time.perf_counter() - t0
    ok = (cordes.details["violations"] == 0 and resolvent.max_discrepancy <= 1e-10
          and all(s.passed for s in sups) and elapsed < 30)
    report("3 lemma suite", ok,
           f"cordes violations {cordes.details['violations']}, resolvent {resolvent.max_discrepancy:.1e} "
           f"(tol 1e-10), sup lemma {[s.passed for s in sups]}, {elapsed:.2f}s (limit 30s)")


def _effective_dimension_upper(b, lam):
    # exact head plus an integral bound on the remaining terms
    d = int(math.ceil(1000 * lam ** (-1 / b)))
    head = operators.effective_dimension(np.arange(1, d + 1, dtype=float) ** -b, lam)
    tail = d ** (1 - b) / ((b - 1) * lam)
    return head + tail


def test_4_effective_dimension_bound():
    t0 = time.perf_counter()
    worst = {}
    for b in (1.5, 2.0, 3.0):
        worst[b] = max(_effective_dimension_upper(b, lam) * lam ** (1 / b)
                       for lam in np.geomspace(1e-6, 1.0, 40))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 10 and elapsed < 5
    report("4 effective dimension", ok,
           f"sup N(lam) lam^(1/b) = {{{', '.join(f'{b}: {v:.3f}' for b, v in worst.items())}}} (limit 10), "
           f"{elapsed:.2f}s (limit 5s)")


def test_5_holder_rates():
    t0 = time.perf_counter()
    rep = harness.run_convergence(rate_config({"kind": "holder", "r": 0.5}))
    elapsed = time.perf_counter() - t0
    dp = abs(rep.fitted_slope_pred - rep.theoretical_slope_pred)
    dh = abs(rep.fitted_slope_H - rep.theoretical_slope_H)
    ok = dp <= 0.15 and dh <= 0.15 and elapsed <= 600
    report("5 holder rates", ok,
           f"pred {rep.fitted_slope_pred:.3f} vs {rep.theoretical_slope_pred:.3f}, "
           f"H {rep.fitted_slope_H:.3f} vs {rep.theoretical_slope_H:.3f} (tol 0.15), {elapsed:.1f}s")


def test_6_piecewise_rates():
    t0 = time.perf_counter()
    rep = harness.run_convergence(rate_config(PIECEWISE))
    elapsed = time.perf_counter() - t0
    dp = abs(rep.fitted_slope_pred - rep.theoretical_slope_pred)
    report("6 piecewise rates", dp <= 0.15 and elapsed <= 600,
           f"pred {rep.fitted_slope_pred:.3f} vs {rep.theoretical_slope_pred:.3f} (tol 0.15), {elapsed:.1f}s")


def test_7_saturation():
    t0 = time.perf_counter()
    phi = {"kind": "holder", "r": 1.5}
    tik = harness.run_convergence(rate_config(phi, "tikhonov"))
    cut = harness.run_convergence(rate_config(phi, "cutoff"))
    elapsed = time.perf_counter() - t0
    gap = tik.fitted_slope_pred - cut.fitted_slope_pred
    report("7 saturation", gap >= 0.05 and elapsed <= 600,
           f"tikhonov {tik.fitted_slope_pred:.3f}, cutoff {cut.fitted_slope_pred:.3f}, "
           f"gap {gap:.3f} (need >= 0.05), {elapsed:.1f}s")


def test_8_determinism(tmp_path):
    cfg = rate_config({"kind": "holder", "r": 0.5}, seed=7)
    blobs = {}
    for tag, jobs in (("run1", 1), ("run2", 1), ("jobs4", 4)):
        files = harness.emit_report(harness.run_convergence(cfg, jobs=jobs), tmp_path / tag)
        blobs[tag] = files["errors.csv"].read_bytes()
    same = blobs["run1"] == blobs["run2"] == blobs["jobs4"]
    report("8 determinism", same,
           f"errors.csv identical across runs and worker counts: {same} ({len(blobs['run1'])} bytes)")

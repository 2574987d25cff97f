"""Acceptance gate: every criterion prints one PASS/FAIL line.

Runs the documented reproduction battery at its stated tolerances. Matrices
from the reference set that could not be retrieved in this environment are
reported per-cell as skips (see tests/conftest.py and README data notes).
"""

import os
import time

import numpy as np
import pytest

from conftest import matrix_path, problem_from_dense, random_spd
from sstepcg.adaptive import AdaptiveConfig, adaptive_solve, select_s_tilde
from sstepcg.basis import build_block, leja_points, params_for
from sstepcg.classic import assemble_tridiag, hscg_attainable_accuracy, hscg_solve
from sstepcg.harness import ResultRow, emit_summary_table, round_up_2sig
from sstepcg.lacore import gram
from sstepcg.matio import load_problem
from sstepcg.ritz import MACHINE_UNIT, RitzState
from sstepcg.sstep import sstep_solve
from sstepcg.trace import CgCoefficients

TABLE1 = ("494_bus", "bcsstk09", "gr_30_30", "nos6", "mhdb416", "nos1")


def _report(criterion, passed, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def nos1():
    return load_problem(matrix_path("nos1"), label="nos1")


@pytest.fixture(scope="module")
def bus494():
    return load_problem(matrix_path("494_bus"), label="494bus")


@pytest.fixture(scope="module")
def nos1_improved_runs(nos1):
    """Shared improved-adaptive runs on nos1, sigma=10, eps*=1e-6."""
    runs = {}
    for kind in ("newton", "chebyshev"):
        for strat in ("adaptive", "unit", "kappa-estimate"):
            cfg = AdaptiveConfig(
                sigma=10, eps_star=1e-6, basis_kind=kind, c_strategy=strat
            )
            _, trace, _ = adaptive_solve(nos1, cfg)
            runs[(kind, strat)] = trace
    return runs


def test_criterion_1_hscg_nos1(nos1):
    t0 = time.perf_counter()
    _, trace, _ = hscg_solve(nos1, 1e-6)
    elapsed = time.perf_counter() - t0
    ok = trace.converged and abs(trace.total_iters - 510) <= 0.15 * 510 and elapsed < 1.0
    _report(1, ok, f"HSCG nos1 {trace.total_iters} iters (510 +-15%), {elapsed:.2f}s")


def test_criterion_2_fixed_sstep_nos1(nos1):
    _, trace, _ = sstep_solve(nos1, 10, 1e-6)
    ok_total = abs(trace.total_iters - 7134) <= 0.2 * 7134
    ok_outer = abs(trace.total_outer - 714) <= 0.2 * 714
    ok = trace.converged and ok_total and ok_outer
    _report(
        2,
        ok,
        f"fixed s=10 nos1: outer={trace.total_outer} (714 +-20%), "
        f"total={trace.total_iters} (7134 +-20%)",
    )


def test_criterion_3_adaptive_c_counts_and_ordering(nos1_improved_runs):
    newt = nos1_improved_runs[("newton", "adaptive")]
    cheb = nos1_improved_runs[("chebyshev", "adaptive")]
    newt_unit = nos1_improved_runs[("newton", "unit")]
    ok_newton = newt.converged and abs(newt.total_outer - 134) <= 0.3 * 134
    ok_cheb = cheb.converged and abs(cheb.total_outer - 187) <= 0.3 * 187
    ok_order = newt.total_outer < newt_unit.total_outer
    ok = ok_newton and ok_cheb and ok_order
    _report(
        3,
        ok,
        f"improved adaptive-c nos1 sigma=10: newton={newt.total_outer} (134 +-30%), "
        f"chebyshev={cheb.total_outer} (187 +-30%), "
        f"ordering adaptive<unit: {newt.total_outer}<{newt_unit.total_outer}",
    )


def test_criterion_4_kappa_estimate_counts(nos1_improved_runs):
    newt = nos1_improved_runs[("newton", "kappa-estimate")]
    cheb = nos1_improved_runs[("chebyshev", "kappa-estimate")]
    ok_counts = (
        newt.converged
        and cheb.converged
        and abs(newt.total_outer - 291) <= 0.3 * 291
        and abs(cheb.total_outer - 255) <= 0.3 * 255
    )
    mean_kappa_n = np.mean(newt.s_schedule)
    mean_adapt_n = np.mean(nos1_improved_runs[("newton", "adaptive")].s_schedule)
    mean_kappa_c = np.mean(cheb.s_schedule)
    mean_adapt_c = np.mean(nos1_improved_runs[("chebyshev", "adaptive")].s_schedule)
    ok_smaller = mean_kappa_n < mean_adapt_n and mean_kappa_c < mean_adapt_c
    ok = ok_counts and ok_smaller
    _report(
        4,
        ok,
        f"kappa-c nos1: newton={newt.total_outer} (291 +-30%), "
        f"chebyshev={cheb.total_outer} (255 +-30%); mean s_k "
        f"{mean_kappa_n:.2f}<{mean_adapt_n:.2f} and {mean_kappa_c:.2f}<{mean_adapt_c:.2f}",
    )


def test_criterion_5_494bus_sigma15_reduction(bus494):
    _, hscg_trace, _ = hscg_solve(bus494, 1e-6)
    ratios = {}
    for kind in ("newton", "chebyshev"):
        cfg = AdaptiveConfig(sigma=15, eps_star=1e-6, basis_kind=kind)
        _, trace, _ = adaptive_solve(bus494, cfg)
        assert trace.converged
        ratios[kind] = hscg_trace.total_iters / trace.total_outer
    ok = any(r >= 10.0 for r in ratios.values())
    _report(
        5,
        ok,
        f"494bus sigma=15: outer-loop reduction vs HSCG ({hscg_trace.total_iters} its) "
        f"newton {ratios['newton']:.1f}x, chebyshev {ratios['chebyshev']:.1f}x (need >=10x)",
    )


def test_criterion_6_convergence_sweep():
    t0 = time.perf_counter()
    missing = [m for m in TABLE1 if not os.path.exists(matrix_path(m))]
    available = [m for m in TABLE1 if m not in missing]
    cells = failures = 0
    for name in available:
        prob = load_problem(matrix_path(name), label=name)
        eps_attain = round_up_2sig(hscg_attainable_accuracy(prob))
        for eps_star in (eps_attain, 1e-6):
            for sigma in (5, 10, 15):
                for kind in ("newton", "chebyshev"):
                    cfg = AdaptiveConfig(sigma=sigma, eps_star=eps_star, basis_kind=kind)
                    _, trace, _ = adaptive_solve(prob, cfg)
                    cells += 1
                    if not (trace.converged and trace.final_true_resid <= eps_star):
                        failures += 1
                        print(
                            f"  cell failed: {name} sigma={sigma} {kind} "
                            f"eps*={eps_star:.1e} -> {trace.final_true_resid:.2e}"
                        )
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and cells == 12 * len(available) and elapsed < 300
    note = f"; UNAVAILABLE matrices skipped: {', '.join(missing)}" if missing else ""
    _report(
        6,
        ok,
        f"convergence sweep: {cells - failures}/{cells} cells converged across "
        f"{len(available)} matrices x sigma{{5,10,15}} x 2 eps* x 2 bases, "
        f"{elapsed:.0f}s{note}",
    )
    if missing:
        pytest.skip(
            f"criterion 6 verified on {cells} of 72 cells; matrices not obtainable "
            f"in this environment: {', '.join(missing)}"
        )


def test_criterion_7_c_trajectory_bounds(nos1, nos1_improved_runs):
    bad = 0
    for trace in nos1_improved_runs.values():
        c = np.array(trace.c_values)
        bad += int(np.sum((c < 1.0) | (c > nos1.kappa_a * 1.01)))
    _report(7, bad == 0, f"all c values within [1, kappa*1.01] on nos1 runs ({bad} outliers)")


def test_criterion_8_property_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(80)
    eps = np.finfo(float).eps

    # (a) basis recurrence identity on 100 random blocks
    for trial in range(100):
        n = int(rng.integers(8, 30))
        s = int(rng.integers(1, 6))
        a_dense = random_spd(n, float(rng.uniform(5, 1e4)), seed=8000 + trial)
        from conftest import dense_to_sparse

        a = dense_to_sparse(a_dense)
        p = rng.standard_normal(n)
        r = rng.standard_normal(n)
        params = params_for(("monomial", "newton", "chebyshev")[trial % 3], s, 0.4, 3.0)
        block = build_block(a, p, r, params, s)
        y_under = block.y.copy()
        y_under[:, s] = 0.0
        y_under[:, 2 * s] = 0.0
        resid = np.linalg.norm(a_dense @ y_under - block.y @ block.b_mat, "fro")
        assert resid <= 50 * eps * np.linalg.norm(a_dense, 2) * np.linalg.norm(block.y, "fro")

    # (b) order-2 exactness and one-sided oracle agreement
    for _ in range(50):
        al = rng.uniform(0.1, 10.0, 2)
        be = rng.uniform(0.1, 10.0, 2)
        st = RitzState()
        st.absorb_step(al[0], be[0])
        st.absorb_step(al[1], be[1])
        w = np.linalg.eigvalsh(assemble_tridiag(CgCoefficients(list(al), list(be)), 2))
        # fp error of the 2x2 update scales with the spectral radius
        assert abs(st.lambda_min - w[0]) <= 8 * eps * w[1]
        assert abs(st.lambda_max - w[1]) <= 8 * eps * w[1]
    checked = 0
    while checked < 200:
        m = int(rng.integers(2, 31))
        al = rng.uniform(1e-3, 1e3, m)
        be = rng.uniform(1e-3, 1e3, m)
        w = np.linalg.eigvalsh(assemble_tridiag(CgCoefficients(list(al), list(be)), m))
        if w[0] <= 0 or w[-1] / w[0] > 1e10:
            continue  # beyond what binary64 can certify at 1e-10 relative
        st = RitzState()
        for a, b in zip(al, be):
            st.absorb_step(a, b)
        # slack widens by the dense oracle's own uncertainty eps*kappa(T)
        slack = 1e-10 + 16 * np.finfo(float).eps * (w[-1] / w[0])
        assert st.lambda_max <= w[-1] * (1 + slack)
        assert st.lambda_min >= w[0] * (1 - slack)
        checked += 1

    # (c) monotone extremal-estimate trajectories on a recorded solve
    prob = problem_from_dense(random_spd(60, 1e4, seed=81))
    _, trace, _ = hscg_solve(prob, 1e-10)
    lmax = np.array(trace.lambda_max)
    lmin = np.array(trace.lambda_min)
    assert np.all(np.diff(lmax) >= -1e-13 * lmax[1:])
    assert np.all(np.diff(lmin) <= 1e-13 * lmin[1:])

    # (d) psi tracks ||r||^2/||p||^2 over 20 steps on a kappa<=100 problem
    a_dense = random_spd(50, 100.0, seed=82)
    prob = problem_from_dense(a_dense)
    _, _, coeffs = hscg_solve(prob, 1e-12)
    st = RitzState()
    r = prob.b.copy()
    p = r.copy()
    for i in range(min(20, len(coeffs))):
        al, be = coeffs.alphas[i], coeffs.betas[i]
        st.absorb_step(al, be)
        r = r - al * (a_dense @ p)
        p = r + be * p
        assert abs(st.psi - np.dot(r, r) / np.dot(p, p)) <= 1e-8

    # (e) select_s_tilde against explicit-SVD brute force on 50 bases
    for trial in range(50):
        n = int(rng.integers(20, 50))
        s_bar = int(rng.integers(2, 6))
        d = np.geomspace(1.0, float(rng.uniform(10, 1e7)), n)
        y = np.empty((n, 2 * s_bar + 1))
        y[:, 0] = rng.standard_normal(n)
        for k in range(1, s_bar + 1):
            y[:, k] = d * y[:, k - 1]
        y[:, s_bar + 1] = rng.standard_normal(n)
        for k in range(1, s_bar):
            y[:, s_bar + 1 + k] = d * y[:, s_bar + k]
        bound = 1e-6 / (MACHINE_UNIT * 1.0)
        s_tilde, _ = select_s_tilde(gram(y), s_bar, 1.0, MACHINE_UNIT, 1e-6, 1.0)
        best = 1
        for i in range(1, s_bar + 1):
            cols = list(range(0, i + 1)) + list(range(s_bar + 1, s_bar + 1 + i))
            sv = np.linalg.svd(y[:, cols], compute_uv=False)
            if sv[-1] > 0 and sv[0] / sv[-1] <= bound * (1 + 1e-3):
                best = i
        assert s_tilde <= best + 1 and s_tilde >= best - 1

    # (f) s=1 monomial s-step coefficients match HSCG
    a_dense = random_spd(40, 60.0, seed=83)
    prob = problem_from_dense(a_dense)
    _, _, ref = hscg_solve(prob, 1e-13)
    _, _, coeffs = sstep_solve(prob, 1, 1e-13)
    m = min(15, len(coeffs), len(ref))
    np.testing.assert_allclose(coeffs.alphas[:m], ref.alphas[:m], rtol=1e-6)
    np.testing.assert_allclose(coeffs.betas[:m], ref.betas[:m], rtol=1e-6)

    # (g) Leja prefixes verified by grid brute force: each chosen point
    # attains the global distance-product maximum of its prefix
    got = leja_points(0.25, 1.75, 6, grid_points=20000)
    xs = np.linspace(0.25, 1.75, 10**6)
    for l in range(2, 6):
        prefix = got[:l]
        obj = np.sum(np.log(np.abs(xs[:, None] - prefix[None, :]) + 1e-300), axis=1)
        chosen = np.sum(np.log(np.abs(got[l] - prefix) + 1e-300))
        assert chosen >= obj.max() - 1e-6

    elapsed = time.perf_counter() - t0
    _report(8, elapsed < 120, f"property suite (a)-(g) all passed in {elapsed:.0f}s (<2min)")


def test_criterion_9_table_format_fidelity(tmp_path):
    rows = [
        ResultRow("synth", "adaptive-improved", "newton", "adaptive", 10, 1e-6,
                  "134 (1328)", "converged", 1328, 134, 9.0e-7),
        ResultRow("synth", "adaptive-improved", "chebyshev", "adaptive", 10, 1e-6,
                  "– [3.1e-08]", "stagnated", 2000, 200, 3.1e-8),
        ResultRow("synth", "sstep", "monomial", "", 10, 1e-6,
                  "–", "diverged", 10, 1, 1e4),
    ]
    path = str(tmp_path / "synthetic.md")
    emit_summary_table(rows, "markdown", path)
    content = open(path, encoding="utf-8").read()
    ok = (
        "134 (1328)" in content
        and "– [3.1e-08]" in content
        and "| – |" in content
    )
    _report(9, ok, "summary-table cell formats reproduced byte-exactly")

"""Acceptance criteria, one test each, at the stated tolerances.

Each check returns ``(passed, detail)``. Running this file directly prints
one PASS/FAIL line per criterion; under pytest the same lines appear in the
terminal summary.
"""
import sys
import time

import numpy as np
import pytest

from recomb.ancestry import (exact_total_variation, omega_bound, simulate_ancestries,
                             total_variation)
from recomb.art import (TreeTopology, catalan, coefficients_via_art, enumerate_topologies,
                        tree_probability, ultrametric_path_sum_literal)
from recomb.forward import coefficients_by_recursion, evolve, reconstruct
from recomb.genome import GenomeLayout, interval
from recomb.measures import TypeDistribution, TypeSpace, composite_recombinator, recombinator
from recomb.segmentation import exact_distribution, exact_table, marginal_check, mc_distribution
from recomb.wright_fisher import mse_vs_n

INSTANCE_A = GenomeLayout.from_rho([0.1, 0.2])
TIMES = (1, 5, 20, 50)


def _instances(seed=2024, count=20):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 6))
        rho = rng.uniform(0.01, 1.0 / n, size=n)
        out.append((GenomeLayout.from_rho(list(rho)), TypeDistribution.random(TypeSpace.binary(n + 1), rng)))
    return out


def criterion_1():
    start = time.perf_counter()
    worst = 0.0
    for L, _ in _instances():
        for t in TIMES:
            rec = coefficients_by_recursion(L, t)
            art = coefficients_via_art(L, t)
            orc = exact_table(L, t)
            worst = max(worst, rec.max_gap(art), rec.max_gap(orc), art.max_gap(orc))
    elapsed = time.perf_counter() - start
    return worst <= 1e-10 and elapsed < 60, f"max gap {worst:.2e} (tol 1e-10), {elapsed:.1f} s (limit 60 s)"


def criterion_2():
    worst = 0.0
    for L, p0 in _instances():
        path = evolve(p0, L, max(TIMES), trajectory=True)
        tables = coefficients_by_recursion(L, max(TIMES), trajectory=True)
        for t in TIMES:
            worst = max(worst, reconstruct(p0, tables[t]).sup_distance(path[t]))
    return worst <= 1e-10, f"max sup-norm gap {worst:.2e} (tol 1e-10)"


def criterion_3():
    expected = np.array([0.49, 0.15, 0.32, 0.04])
    gaps = [np.max(np.abs(coefficients_by_recursion(INSTANCE_A, 2).values - expected)),
            np.max(np.abs(exact_distribution(INSTANCE_A, 2) - expected)),
            np.max(np.abs(coefficients_via_art(INSTANCE_A, 2).values - expected))]
    t1 = tree_probability(INSTANCE_A, TreeTopology(0, None, TreeTopology(1)), 2)
    t2 = tree_probability(INSTANCE_A, TreeTopology(1, TreeTopology(0), None), 2)
    worst = max(max(gaps), abs(t1 - 0.02), abs(t2 - 0.02))
    return worst <= 1e-12, f"table gap {max(gaps):.2e}, P(T1)={t1:.15f}, P(T2)={t2:.15f} (tol 1e-12)"


def _double_sums(r1, r3, r5, tau):
    # the two nested sums over waiting times, as printed
    lam0 = 1 - r1 - r3 - r5
    lam_1 = 1 - r3 - r5                 # after the cut at 1/2
    lam_3 = (1 - r1) * (1 - r5)         # after the cut at 3/2
    lam_13 = 1 - r5
    first = sum(lam0 ** k * lam_1 ** i * lam_13 ** (tau - 2 - k - i)
                for k in range(tau - 1) for i in range(tau - 1 - k))
    second = sum(lam0 ** k * lam_3 ** i * lam_13 ** (tau - 2 - k - i)
                 for k in range(tau - 1) for i in range(tau - 1 - k))
    return r1 * r3 * first + r1 * r3 * (1 - r5) * second


def _closed_form(r1, r3, r5, tau):
    lam0 = 1 - r1 - r3 - r5
    lam_1, lam_3, lam_13 = 1 - r3 - r5, (1 - r1) * (1 - r5), 1 - r5
    tree1 = (lam_13 ** tau - lam0 ** tau) * r1 / (lam_13 - lam0) - (lam_1 ** tau - lam0 ** tau)
    tree2 = ((lam_13 ** tau - lam0 ** tau) * r3 / (lam_13 - lam0)
             - (lam_3 ** tau - lam0 ** tau) * r3 / (lam_3 - lam0))
    return tree1 + tree2


def criterion_4():
    rho = (0.05, 0.1, 0.15)
    L = GenomeLayout.from_rho(list(rho))
    worst = 0.0
    for tau in range(2, 9):
        sums, closed = _double_sums(*rho, tau), _closed_form(*rho, tau)
        lib_sums = sum(ultrametric_path_sum_literal(L, T, tau) for T in enumerate_topologies(0b011))
        lib_closed = sum(tree_probability(L, T, tau) for T in enumerate_topologies(0b011))
        oracle = exact_distribution(L, tau)[0b011]
        worst = max(worst, abs(sums - closed), abs(lib_sums - lib_closed), abs(sums - lib_sums),
                    abs(closed - oracle))
    return worst <= 1e-12, f"max gap over tau=2..8 {worst:.2e} (tol 1e-12)"


def criterion_5():
    start = time.perf_counter()
    counts = [len(enumerate_topologies(interval(0, k))) for k in range(1, 7)]
    elapsed = time.perf_counter() - start
    ok = counts == [1, 2, 5, 14, 42, 132] == [catalan(k) for k in range(1, 7)]
    return ok and elapsed < 1.0, f"counts {counts}, {elapsed * 1000:.0f} ms (limit 1 s)"


def criterion_6():
    rng = np.random.default_rng(6)
    L = GenomeLayout.from_rho(list(rng.uniform(0.01, 0.2, size=5)))
    worst = 0.0
    for lo in range(5):
        for hi in range(lo + 1, 6):
            for t in range(21):
                worst = max(worst, marginal_check(L, t, interval(lo, hi)))
    return worst <= 1e-12, f"max violation {worst:.2e} over 15 windows, t<=20 (tol 1e-12)"


def criterion_7():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        sizes = tuple(int(a) for a in rng.integers(1, 4, size=int(rng.integers(2, 6))))
        p = TypeDistribution.random(TypeSpace(sizes), rng)
        n = len(sizes) - 1
        for a in range(n):
            ra = recombinator(p, a)
            worst = max(worst, np.max(np.abs(recombinator(ra, a).weights - ra.weights)))
            for b in range(a + 1, n):
                ab = recombinator(ra, b).weights
                ba = recombinator(recombinator(p, b), a).weights
                worst = max(worst, np.max(np.abs(ab - ba)))
    return worst <= 1e-12, f"max idempotence/commutativity defect {worst:.2e} (tol 1e-12)"


def criterion_8():
    start = time.perf_counter()
    freq, se = mc_distribution(INSTANCE_A, 3, 10**6, seed=8)
    elapsed = time.perf_counter() - start
    z = np.abs(freq - exact_distribution(INSTANCE_A, 3)) / se
    return bool(np.all(z <= 3)) and elapsed < 120, f"max |z| {z.max():.2f} (limit 3), {elapsed:.1f} s (limit 120 s)"


def criterion_9():
    p0 = TypeDistribution.random(TypeSpace.binary(3), np.random.default_rng(9))
    table = mse_vs_n(p0, INSTANCE_A, 3, [10**2, 10**3, 10**4], 200, seed=7)
    slope = table["slope"]
    batch = simulate_ancestries(INSTANCE_A, 10**3, 5, 10**5, seed=9)
    p = float(batch.coalescence_free.mean())
    sigma = np.sqrt(p * (1 - p) / 10**5)
    bound = omega_bound(INSTANCE_A, 10**3, 5)
    ok = -1.3 <= slope <= -0.7 and p >= bound - 3 * sigma
    return ok, f"MSE slope {slope:.3f} (range [-1.3, -0.7]); P(Omega_5)={p:.4f} vs bound {bound:.4f} - 3 sigma"


def criterion_10():
    exact = exact_distribution(INSTANCE_A, 5)
    sizes = (10**2, 10**3, 10**4)
    tv = [total_variation(simulate_ancestries(INSTANCE_A, N, 5, 10**5, seed=0), exact) for N in sizes]
    tv_exact = [exact_total_variation(INSTANCE_A, N, 5, exact) for N in sizes]
    strict = all(a > b for a, b in zip(tv, tv[1:]))
    strict_exact = all(a > b for a, b in zip(tv_exact, tv_exact[1:]))
    return strict and strict_exact, ("Monte Carlo TV " + ", ".join(f"{x:.5f}" for x in tv)
                                     + "; exact TV " + ", ".join(f"{x:.2e}" for x in tv_exact))


def criterion_11():
    aL = coefficients_by_recursion(INSTANCE_A, 500).values[INSTANCE_A.full]
    p0 = TypeDistribution.random(TypeSpace.binary(3), np.random.default_rng(11))
    gap = evolve(p0, INSTANCE_A, 500).sup_distance(composite_recombinator(p0, INSTANCE_A.full))
    return aL >= 0.999 and gap <= 1e-3, f"a_L(500)={aL:.6f} (>= 0.999), sup gap to full product {gap:.2e} (tol 1e-3)"


CRITERIA = {
    1: ("three-way exact equivalence", criterion_1),
    2: ("forward/backward consistency", criterion_2),
    3: ("worked instance A", criterion_3),
    4: ("four-site double sums vs closed form", criterion_4),
    5: ("Catalan topology counts", criterion_5),
    6: ("marginalisation", criterion_6),
    7: ("recombinator algebra", criterion_7),
    8: ("Monte Carlo segmentation", criterion_8),
    9: ("Wright-Fisher LLN and no-coalescence bound", criterion_9),
    10: ("partitioning vs segmentation law in N", criterion_10),
    11: ("stationarity", criterion_11),
}


def _line(k, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {k:2d} ({CRITERIA[k][0]}): {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, acceptance_log):
    ok, detail = CRITERIA[k][1]()
    line = _line(k, ok, detail)
    acceptance_log.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k][1]()
        failed += not ok
        print(_line(k, ok, detail), flush=True)
    sys.exit(1 if failed else 0)

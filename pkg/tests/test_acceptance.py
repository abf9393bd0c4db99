"""Acceptance criteria 1-10, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the "acceptance criteria" section at the end of the session.
"""

import random
import time

import numpy as np
from scipy.optimize import brentq

from pwmelnikov import picard_fuchs as pf
from pwmelnikov.errors import RatioDenominatorError
from pwmelnikov.quadrature import abelian_integral, fd_step, finite_difference, lower_abelian_integral, melnikov_direct
from pwmelnikov.reduction import evaluate_representation, melnikov_representation
from pwmelnikov.simulator import SECTION_GUARD, find_limit_cycles
from pwmelnikov.systems import BT, LV, Perturbation
from pwmelnikov.zeros import (ODD, bt_second_derivative, bt_second_derivative_zero, isolate_zeros,
                              one_zero_perturbation, theoretical_bound)

from conftest import record_criterion

SAMPLE_GUARD = 0.01  # fraction of the energy interval left out at each end


def samples(sys, count):
    return [float(h) for h in sys.sample_energies(count, SAMPLE_GUARD)]


def guarded_grid(sys, count=30):
    return [float(h) for h in sys.sample_energies(count, SAMPLE_GUARD)]


def test_criterion_1_reflection():
    start = time.perf_counter()
    worst = 0.0
    for sys in (LV, BT):
        for h in samples(sys, 20):
            for total in range(9):
                for i in range(total + 1):
                    j = total - i
                    upper = abelian_integral(sys, i, j, h)
                    lower = lower_abelian_integral(sys, i, j, h)
                    worst = max(worst, abs(lower + (-1) ** j * upper) / (1 + abs(upper)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 60
    record_criterion(1, "reflection identity", ok, f"worst {worst:.2e} <= 1e-08, {elapsed:.1f}s < 60s")
    assert ok


def test_criterion_2_reduction_vs_oracle():
    start = time.perf_counter()
    worst = 0.0
    r = random.Random(2)
    for sys in (LV, BT):
        hs = samples(sys, 20)
        for n in range(1, 7):
            for _ in range(20):
                p = Perturbation.random(n, r)
                rep = melnikov_representation(sys, p)
                for h in hs:
                    a = evaluate_representation(rep, h)
                    b = melnikov_direct(sys, p, h, 1e-12)
                    worst = max(worst, abs(a - b) / max(abs(b), 1e-12))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 300
    record_criterion(2, "reduction vs direct quadrature", ok, f"worst relative {worst:.2e} < 1e-06, {elapsed:.1f}s < 300s")
    assert ok


def _base_identities():
    """(system, label, lhs(h), rhs(h)); both sides by quadrature with literal coefficients."""
    I = abelian_integral  # noqa: E741
    return [
        (LV, "I11 = I01", lambda h: I(LV, 1, 1, h), lambda h: I(LV, 0, 1, h)),
        (LV, "I20 = 4/3 I10 - 1/3 I00", lambda h: I(LV, 2, 0, h), lambda h: 4 / 3 * I(LV, 1, 0, h) - I(LV, 0, 0, h) / 3),
        (LV, "I31 = -1/(2h) I01", lambda h: I(LV, 3, 1, h), lambda h: -0.5 / h * I(LV, 0, 1, h)),
        (LV, "I30 = (I02/2 - 3/4 I10 + 1/4 I00)/h", lambda h: I(LV, 3, 0, h),
         lambda h: (0.5 * I(LV, 0, 2, h) - 0.75 * I(LV, 1, 0, h) + 0.25 * I(LV, 0, 0, h)) / h),
        (BT, "I02 = 3/2 h I00 - I10", lambda h: I(BT, 0, 2, h), lambda h: 1.5 * h * I(BT, 0, 0, h) - I(BT, 1, 0, h)),
        (BT, "I20 = I00", lambda h: I(BT, 2, 0, h), lambda h: I(BT, 0, 0, h)),
        (BT, "I21 = I01", lambda h: I(BT, 2, 1, h), lambda h: I(BT, 0, 1, h)),
        (BT, "I03 = 18/11 h I01 - 12/11 I11", lambda h: I(BT, 0, 3, h),
         lambda h: 18 / 11 * h * I(BT, 0, 1, h) - 12 / 11 * I(BT, 1, 1, h)),
    ]


def test_criterion_3_base_identities():
    worst, where = 0.0, ""
    for sys, label, lhs, rhs in _base_identities():
        for h in samples(sys, 20):
            a, b = lhs(h), rhs(h)
            rel = abs(a - b) / max(abs(a), abs(b), 1e-300)
            if rel > worst:
                worst, where = rel, label
    ok = worst < 1e-7
    record_criterion(3, "base identities", ok, f"worst relative {worst:.2e} < 1e-07 ({where})")
    assert ok


def test_criterion_4_picard_fuchs():
    pf_worst = max(pf.pf_residual(pf.pf_system(sys, block), h)
                   for sys, block in ((LV, "V1"), (LV, "V2"), (BT, "V1"), (BT, "V2")) for h in guarded_grid(sys))
    second = {}
    for sys, block in ((LV, "V2"), (BT, "V1"), (BT, "V2")):
        second[f"{sys.value}/{block}"] = max(pf.second_order_residual(sys, block, h) for h in guarded_grid(sys))
    bad = [k for k, v in second.items() if v >= 1e-5]
    ok = pf_worst < 1e-6 and not bad
    detail = f"first-order worst {pf_worst:.2e} < 1e-06; second-order " + ", ".join(
        f"{k} {v:.2e}" for k, v in second.items()) + " vs 1e-05"
    if bad:
        derived = max(pf.second_order_residual(sys, block, h, table="derived")
                      for sys, block in ((LV, "V2"), (BT, "V1"), (BT, "V2")) for h in guarded_grid(sys))
        detail += f"; failing: {', '.join(bad)}; relations rederived from the first-order pairs: worst {derived:.2e}"
    record_criterion(4, "Picard-Fuchs and second-order residuals (printed relations)", ok, detail)
    assert ok


def test_criterion_5_riccati():
    worst, skipped = 0.0, 0
    for kind, sys in (("omega_LV", LV), ("chi_BT_V2", BT), ("omega_BT_second", BT)):
        for h in guarded_grid(sys):
            try:
                worst = max(worst, pf.riccati_residual(sys, kind, h))
            except RatioDenominatorError:
                skipped += 1
    ok = worst < 1e-5
    record_criterion(5, "Riccati residuals", ok, f"worst {worst:.2e} < 1e-05, {skipped} points at a vanishing ratio denominator")
    assert ok


def test_criterion_6_annihilator():
    r = random.Random(6)
    worst, exact_failures, degree_failures, kernels = 0.0, 0, 0, set()
    for sys in (LV, BT):
        for k in range(50):
            n = 2 + k % 5
            rep = melnikov_representation(sys, Perturbation.random(n, r))
            ann = pf.construct_annihilator(sys, rep)
            kernels.add(ann.kernel_dim)
            exact_failures += any(not x.is_zero() for x in pf.annihilation_remainder(rep, ann))
            degree_failures += bool(ann.degree_violations())
            rp = pf.residual_polynomials(rep, ann)
            for h in [float(h) for h in sys.sample_energies(3, 0.1)]:
                diff = abs(pf.annihilator_residual(sys, rep, ann, h) - rp.evaluate(sys, h))
                worst = max(worst, diff / (1 + pf.operator_scale(ann, rep, h)))
    ok = exact_failures == 0 and degree_failures == 0 and worst < 1e-8
    record_criterion(6, "annihilating operator", ok,
                     f"exact failures {exact_failures}, degree failures {degree_failures}, "
                     f"numeric |L[M]-R| worst {worst:.2e} < 1e-08, kernel dims {sorted(kernels)}")
    assert ok


def test_criterion_7_bt_second_derivative_zero():
    lo, hi = BT.guarded_interval(SAMPLE_GUARD)
    hs = np.linspace(lo, hi, 400)
    signs = np.sign([bt_second_derivative(h) for h in hs])
    changes = int(np.count_nonzero(np.diff(signs)))
    root, (a, b) = bt_second_derivative_zero()

    def fd(h):
        return finite_difference(lambda t: abelian_integral(BT, 0, 0, t, 1e-13), h, fd_step(BT, h), 2)

    fd_root = brentq(fd, a - 0.01, b + 0.01, xtol=1e-13)
    ok = changes == 1 and abs(root - fd_root) < 1e-6
    record_criterion(7, "single zero of BT I00''", ok,
                     f"{changes} sign change, h0 = {root:.12f}, |h0 - fd root| = {abs(root - fd_root):.1e} < 1e-06")
    assert ok


def test_criterion_8_bound_envelopes():
    start = time.perf_counter()
    r = random.Random(8)
    violations, most = [], {}
    for sys in (LV, BT):
        for n in range(1, 7):
            bound = theoretical_bound(sys, n)
            for _ in range(100):
                report = isolate_zeros(melnikov_representation(sys, Perturbation.random(n, r)))
                most[(sys.value, n)] = max(most.get((sys.value, n), 0), report.odd_count)
                if report.odd_count > bound:
                    violations.append((sys.value, n, report.odd_count))
    elapsed = time.perf_counter() - start
    ok = not violations and elapsed < 600
    peak = ", ".join(f"{s}{n}:{c}" for (s, n), c in sorted(most.items()))
    record_criterion(8, "zero counts within bounds", ok,
                     f"{len(violations)} violations, max odd-simple per system/n {peak}, {elapsed:.1f}s < 600s")
    assert ok


def _sign_definite():
    split = Perturbation(1, b_plus={(0, 0): 1}, b_minus={(0, 0): -1})
    odd = Perturbation(1, b_plus={(0, 1): 1}, b_minus={(0, 1): 1})
    return [split, split.scaled(-1), odd, odd.scaled(-2), split + odd.scaled(3)]


def test_criterion_9_simulation():
    start = time.perf_counter()
    problems = []
    for sys in (LV, BT):
        lo, hi = sys.guarded_interval(0.15)
        for h_star in np.linspace(lo, hi, 5):
            p = one_zero_perturbation(sys, float(h_star))
            report = isolate_zeros(melnikov_representation(sys, p))
            odd = [b.root for b in report.brackets if b.multiplicity == ODD]
            found = find_limit_cycles(sys, p, 1e-3)
            if len(odd) != 1 or len(found) != 1 or abs(found[0].h_cycle - h_star) >= 0.05:
                problems.append(f"{sys.value} h*={h_star:.3f}: zeros {len(odd)}, cycles {len(found)}")
        lo_s, hi_s = sys.guarded_interval(SECTION_GUARD)
        for p in _sign_definite():
            report = isolate_zeros(melnikov_representation(sys, p))
            found = find_limit_cycles(sys, p, 1e-3)
            if report.brackets or found:
                problems.append(f"{sys.value} sign-definite: zeros {len(report.brackets)}, cycles {len(found)}")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 300
    record_criterion(9, "simulation cross-check", ok,
                     f"10 one-zero and 10 sign-definite cases, {len(problems)} mismatches, {elapsed:.1f}s < 300s"
                     + (f"; {problems}" if problems else ""))
    assert ok


def test_criterion_10_lv_positivity_monotonicity():
    hs = samples(LV, 200)
    i01 = [abelian_integral(LV, 0, 1, h) for h in hs]
    i00 = [abelian_integral(LV, 0, 0, h) for h in hs]
    increasing = all(b > a for a, b in zip(i00, i00[1:]))
    ok = min(i01) > 0 and increasing
    record_criterion(10, "LV I01 > 0 and I00 increasing", ok,
                     f"min I01 = {min(i01):.3e} over {len(hs)} energies, I00 increasing: {increasing}")
    assert ok

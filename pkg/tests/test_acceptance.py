"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run with ``pytest -v tests/test_acceptance.py`` (lines are printed even
when output capture is on) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from chanres.core import Channel, ChoiMatrix
from chanres.monotones import (channel_entropy, diamond_distance, dh_choi, dmax, fidelity_measures, log_robustness,
                               regularized_m)
from chanres.rates import asymptotic_estimate, dilute_bounds, distill_bounds
from chanres.superchannels import random_unitary
from chanres.theories import THEORY_IDS, get_target, make_theory
from chanres.verify import collapse_suite, monotonicity_suite, ordering_suite, qubit_theory

PAULIS = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
IDENT = Channel.from_unitary(np.eye(2)).choi


def depolarizing(p):
    return Channel.from_kraus([np.sqrt(1 - 3 * p / 4) * PAULIS[0]] + [np.sqrt(p / 4) * s for s in PAULIS[1:]]).choi


def _emit(capsys, number, ok, detail):
    line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


# --- 1: constants table ---------------------------------------------------------

CONSTANT_ROWS = [
    ("purity", "id2", 2.0), ("cc", "id2", 2.0), ("qc", "id2", 1.0), ("nu", "g2", 1.0),
    ("coh", "hadamard", 1.0), ("coh", "gplus", 1.0), ("ent", "cnot", 2.0), ("ent", "gphi", 1.0),
]


def check_constants(capsys=None):
    start = time.perf_counter()
    bad, lines = [], []
    for tid, key, c in CONSTANT_ROWS:
        t = get_target(tid, key)
        th = t.theory()
        got = {"max": dmax(t.channel, th).value, "htilde": dh_choi(t.channel, th).value}
        lr = log_robustness(t.channel, th).value
        if th.robustness_finite:
            got["lr"] = lr
        elif not math.isinf(lr):
            bad.append(f"{tid}/{key}: LR finite ({lr:.6g}) where it should be infinite")
        for name, v in got.items():
            if abs(v - c) > 1e-5:
                bad.append(f"{tid}/{key}/{name}={v:.6g} (expected {c:g})")
        lines.append(f"{tid}/{key}:" + ",".join(f"{k}={v:.6f}" for k, v in got.items()))
    elapsed = time.perf_counter() - start
    if elapsed > 300:
        bad.append(f"runtime {elapsed:.0f}s > 300s")
    detail = f"constants in {elapsed:.1f}s; " + ("; ".join(bad) if bad else "all rows match within 1e-5")
    return _emit(capsys, 1, not bad, detail), bad


def test_criterion_01_constants(capsys):
    ok, bad = check_constants(capsys)
    assert ok, bad


# --- 2: regularisation constancy ----------------------------------------------

def check_regularization(capsys=None):
    bad = []
    for tid, key in (("qc", "id2"), ("ent", "gphi")):
        t = get_target(tid, key)
        for name, c in t.analytic_m.items():
            r1, r2 = regularized_m(name, t, 1), regularized_m(name, t, 2)
            if abs(r2.value - r1.value) > 1e-4 or abs(r1.value - c) > 1e-4:
                bad.append(f"{tid}/{key}/{name}: n1={r1.value:.6g} n2={r2.value:.6g}")
    return _emit(capsys, 2, not bad, "; ".join(bad) or "n = 2 per-copy values equal n = 1 within 1e-4"), bad


def test_criterion_02_regularization(capsys):
    ok, bad = check_regularization(capsys)
    assert ok, bad


# --- 3: collapse ------------------------------------------------------------------

def check_collapse(capsys=None):
    fails = []
    for tid, key in (("coh", "gplus"), ("ent", "gphi")):
        rep = collapse_suite(get_target(tid, key), tol=1e-5)
        fails += [f"{tid}/{key}:{c.name} {c.lhs:.6g} vs {c.rhs:.6g}" for c in rep.failures]
    return _emit(capsys, 3, not fails, "; ".join(fails) or "D_max, D_H ends, D_H~, D_H^ agree within 1e-5"), fails


def test_criterion_03_collapse(capsys):
    ok, fails = check_collapse(capsys)
    assert ok, fails


# --- 4: ordering chain ---------------------------------------------------------

def check_ordering(capsys=None):
    counts = {}
    worst = []
    for tid in THEORY_IDS:
        rep = ordering_suite(qubit_theory(tid), trials=50, eps_values=(0.0, 0.05), seed=0, tol=1e-6)
        for c in rep.failures:
            eps = c.detail.split("eps=")[1]
            counts[(tid, eps)] = counts.get((tid, eps), 0) + 1
            worst.append((c.rhs - c.lhs, tid, c.name, c.detail))
    if counts:
        worst.sort(reverse=True)
        gap, tid, name, detail = worst[0]
        summary = ", ".join(f"{t}@eps={e}:{n}" for (t, e), n in sorted(counts.items()))
        detail = f"violations {summary}; worst {tid} {name} {detail} by {gap:.4g}"
    else:
        detail = "no violations over 6 theories x 50 channels x eps in {0, 0.05}"
    return _emit(capsys, 4, not counts, detail), counts


def test_criterion_04_ordering(capsys):
    ok, counts = check_ordering(capsys)
    assert ok, counts


# --- 5: monotonicity -------------------------------------------------------------

def check_monotonicity(capsys=None):
    fails = []
    for tid in THEORY_IDS:
        rep = monotonicity_suite(qubit_theory(tid), trials=100, channels=5, seed=0, tol=1e-6)
        fails += [f"{tid}:{c.name}:{c.detail}" for c in rep.failures]
    detail = "; ".join(fails[:5]) or "no increase over 6 theories x 5 channels x 100 superchannels (lr, max)"
    return _emit(capsys, 5, not fails, detail), fails


def test_criterion_05_monotonicity(capsys):
    ok, fails = check_monotonicity(capsys)
    assert ok, fails


# --- 6: rate brackets ---------------------------------------------------------------

def check_brackets(capsys=None):
    i4 = Channel.from_unitary(np.eye(4)).choi
    cnot = get_target("ent", "cnot").channel
    had = get_target("coh", "hadamard")
    cases = [
        ("dilute I4 qc", dilute_bounds(i4, get_target("qc", "id2"), make_theory("qc", 4, 4)), (2, 2)),
        ("distill I4 qc", distill_bounds(i4, get_target("qc", "id2"), make_theory("qc", 4, 4)), (2, 2)),
        ("dilute Had coh", dilute_bounds(had.channel, had, had.theory()), (1, 1)),
        ("distill CNOT->Phi+ ent", distill_bounds(cnot, get_target("ent", "gphi"), make_theory("ent", (2, 2), (2, 2))),
         (2, 2)),
    ]
    bad = []
    for name, rb, want in cases:
        closed = "closed-form" in rb.tag_lower and "closed-form" in rb.tag_upper
        if rb.bracket != want or not closed:
            bad.append(f"{name}: got {list(rb.bracket)} want {list(want)} ({rb.theorem_tag})")
    return _emit(capsys, 6, not bad, "; ".join(bad) or "all four brackets match the closed forms"), bad


def test_criterion_06_brackets(capsys):
    ok, bad = check_brackets(capsys)
    assert ok, bad


# --- 7: diamond distance -------------------------------------------------------

def check_diamond(capsys=None):
    bad = []
    for p in (0.1, 0.5, 1.0):
        v = diamond_distance(IDENT, depolarizing(p))
        if abs(v - 3 * p / 4) > 1e-6:
            bad.append(f"depolarizing p={p}: {v:.8g} vs {3 * p / 4:g}")
    v = diamond_distance(IDENT, Channel.from_unitary(PAULIS[3]).choi)
    if abs(v - 1) > 1e-6:
        bad.append(f"Z: {v:.8g} vs 1")
    return _emit(capsys, 7, not bad, "; ".join(bad) or "3p/4 and Z = 1 reproduced within 1e-6"), bad


def test_criterion_07_diamond(capsys):
    ok, bad = check_diamond(capsys)
    assert ok, bad


# --- 8: fidelity relation ---------------------------------------------------------

def check_fidelity(capsys=None):
    th = make_theory("coh")
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        u = Channel.from_unitary(random_unitary(rng, 2)).choi
        rep = fidelity_measures(u, th, restarts=1)
        worst = max(worst, abs(-math.log2(rep.f_tilde) - dh_choi(u, th).value))
    ok = worst <= 1e-5
    return _emit(capsys, 8, ok, f"max |-log2 F~ - D_H~| over 10 unitaries = {worst:.2e}"), worst


def test_criterion_08_fidelity_relation(capsys):
    ok, worst = check_fidelity(capsys)
    assert ok, worst


# --- 9: smoothing monotonicity --------------------------------------------------

def check_smoothing(capsys=None):
    bad = []
    grid = (0.0, 0.01, 0.05, 0.1)
    for tid in THEORY_IDS:
        th = qubit_theory(tid)
        names = ("lr", "max") if th.robustness_finite else ("max",)
        for p in (0.0, 0.25, 0.5, 0.75, 1.0):
            c = ChoiMatrix(depolarizing(p).data, th.dim_in, th.dim_out)
            for name in names:
                fn = log_robustness if name == "lr" else dmax
                vals = [fn(c, th, e).value for e in grid]
                if any(b > a + 1e-7 for a, b in zip(vals, vals[1:])):
                    bad.append(f"{tid}/{name}/p={p}: {vals}")
    detail = "; ".join(bad[:4]) or "LR^eps and D_max^eps non-increasing on the depolarizing family"
    return _emit(capsys, 9, not bad, detail), bad


def test_criterion_09_smoothing(capsys):
    ok, bad = check_smoothing(capsys)
    assert ok, bad


# --- 10: channel entropy anchor ------------------------------------------------------

def _shannon(p):
    p = np.asarray([x for x in p if x > 0])
    return float(-(p * np.log2(p)).sum())


def check_entropy(capsys=None):
    bad = []
    s_id = channel_entropy(IDENT).value
    if abs(s_id - 2) > 1e-6:
        bad.append(f"S(I2)={s_id:.8g}")
    for p in (0.1, 0.4, 0.8):
        want = 2 - _shannon([1 - 3 * p / 4, p / 4, p / 4, p / 4])
        got = channel_entropy(depolarizing(p)).value
        if abs(got - want) > 1e-5:
            bad.append(f"S(dep {p})={got:.8g} vs {want:.8g}")
    est = asymptotic_estimate(IDENT, make_theory("purity"), 2)
    if abs(est.anchor - s_id / 2) > 1e-9 or abs(est.anchor - 1) > 1e-6:
        bad.append(f"anchor {est.anchor}")
    if not np.allclose(est.normalized, [est.anchor] * 2, atol=1e-6):
        bad.append(f"identity sequence {est.normalized} not at the anchor")
    dep = asymptotic_estimate(depolarizing(0.4), make_theory("purity"), 1)
    if dep.normalized[0] < dep.anchor - 1e-6:
        bad.append("one-shot value below the asymptotic anchor")
    return _emit(capsys, 10, not bad, "; ".join(bad) or "S(I2)=2, depolarizing entropies and anchor S/2 = 1"), bad


def test_criterion_10_entropy(capsys):
    ok, bad = check_entropy(capsys)
    assert ok, bad


CHECKS = [check_constants, check_regularization, check_collapse, check_ordering, check_monotonicity,
          check_brackets, check_diamond, check_fidelity, check_smoothing, check_entropy]


if __name__ == "__main__":
    results = [fn()[0] for fn in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)

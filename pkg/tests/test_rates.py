import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from chanres.core import Channel, ChoiMatrix
from chanres.monotones import channel_entropy
from chanres.rates import (_max_n, _min_n, asymptotic_estimate, ceil_snap, constant_trace_check, dilute_bounds,
                           distill_bounds, floor_snap)
from chanres.theories import get_target, make_theory

PAULIS = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]


def depolarizing(p):
    return Channel.from_kraus([np.sqrt(1 - 3 * p / 4) * PAULIS[0]] + [np.sqrt(p / 4) * s for s in PAULIS[1:]]).choi


def test_snaps():
    assert floor_snap(1.99999999995) == 2
    assert floor_snap(1.9) == 1
    assert ceil_snap(2.00000000004) == 2
    assert ceil_snap(2.1) == 3
    assert ceil_snap(-0.3) == 0
    assert math.isinf(floor_snap(math.inf))


@hsettings(max_examples=50, deadline=None)
@given(d=st.floats(0.0, 20.0), base=st.floats(0.5, 3.0), slope=st.floats(0.0, 0.2))
def test_n_search_predicates(d, base, slope):
    """``max{n : n <= d/m(n)}`` and ``min{n : n >= d/m(n)}`` satisfy their defining inequalities."""
    def m(n):
        return base + slope * (n - 1)

    n_l, capped = _max_n(d, m, 64)
    if n_l > 0:
        assert n_l <= d / m(n_l) + 1e-7
    if not capped:
        assert n_l + 1 > d / m(n_l + 1) - 1e-7
    n_u, capped = _min_n(d, m, 64)
    if not capped and n_u > 0:
        assert n_u >= d / m(n_u) - 1e-7
        assert n_u - 1 < d / m(n_u - 1) + 1e-7 if n_u > 1 else True


def test_qc_i4_brackets():
    i4 = Channel.from_unitary(np.eye(4)).choi
    th = make_theory("qc", 4, 4)
    t = get_target("qc", "id2")
    assert dilute_bounds(i4, t, th).bracket == (2, 2)
    d = distill_bounds(i4, t, th, restarts=2)
    assert d.bracket == (2, 2)
    assert "relaxed-free-set" in d.flags


def test_free_input_gives_zero():
    th = make_theory("qc")
    t = get_target("qc", "id2")
    free = ChoiMatrix(np.eye(4) / 4, 2, 2)
    assert dilute_bounds(free, t, th).bracket == (0, 0)
    assert distill_bounds(free, t, th, restarts=1).bracket == (0, 0)


def test_purity_identity_brackets():
    ident = Channel.from_unitary(np.eye(2)).choi
    t = get_target("purity", "id2")
    th = make_theory("purity")
    assert distill_bounds(ident, t, th, restarts=2).bracket == (1, 1)
    dil = dilute_bounds(ident, t, th)
    assert dil.bracket == (1, 1)
    assert not any(f.startswith("constant-trace") for f in dil.flags)


def test_hadamard_dilution_closed_form_flags_trace_condition():
    t = get_target("coh", "hadamard")
    rb = dilute_bounds(t.channel, t, t.theory())
    assert rb.bracket == (1, 1)
    assert any(f.startswith("constant-trace-condition-failed") for f in rb.flags)


def test_constant_trace_check():
    assert constant_trace_check(get_target("purity", "id2")).passed
    assert constant_trace_check(get_target("coh", "gplus")).passed
    assert constant_trace_check(get_target("nu", "g2")).passed
    assert not constant_trace_check(get_target("coh", "hadamard")).passed


def test_unregistered_measure_uses_search():
    t = get_target("nu", "g2")
    rb = distill_bounds(t.channel, t, t.theory(), restarts=2)
    assert rb.bracket == (0, 1)
    assert "m-computed" in rb.flags and rb.tag_upper.endswith("n-search")


@pytest.mark.parametrize("tid", ["qc", "purity"])
def test_depolarizing_grid_monotone(tid):
    th = make_theory(tid)
    t = get_target(tid, "id2")
    prev_dil, prev_dist = math.inf, math.inf
    for p in (0.0, 0.3, 0.6, 1.0):
        c = depolarizing(p)
        dil = dilute_bounds(c, t, th)
        dist = distill_bounds(c, t, th, restarts=1)
        assert dil.n_upper <= prev_dil and dist.n_upper <= prev_dist
        assert dil.n_lower <= dil.n_upper and dist.n_lower <= dist.n_upper
        prev_dil, prev_dist = dil.n_upper, dist.n_upper


def test_epsilon_monotone_brackets():
    th = make_theory("qc")
    t = get_target("qc", "id2")
    c = depolarizing(0.1)
    d0, d1 = distill_bounds(c, t, th, 0.0, restarts=1), distill_bounds(c, t, th, 0.2, restarts=1)
    assert d1.n_lower >= d0.n_lower
    u0, u1 = dilute_bounds(c, t, th, 0.0), dilute_bounds(c, t, th, 0.2)
    assert u1.n_upper <= u0.n_upper


def test_collapse_premise_gives_tight_brackets():
    ident = Channel.from_unitary(np.eye(2)).choi
    for tid in ("qc", "purity", "cc"):
        t = get_target(tid, "id2")
        for rb in (dilute_bounds(ident, t, make_theory(tid)), distill_bounds(ident, t, make_theory(tid), restarts=1)):
            assert rb.n_upper - rb.n_lower <= 1


def test_asymptotic_estimate_identity_purity():
    est = asymptotic_estimate(Channel.from_unitary(np.eye(2)).choi, make_theory("purity"), 2)
    assert np.allclose(est.sequence, [2, 2], atol=1e-6)
    assert abs(est.anchor - 1) < 1e-6
    assert est.label == "finite-n estimate, not the limit"


def test_asymptotic_estimate_free_channel():
    est = asymptotic_estimate(ChoiMatrix(np.eye(4) / 4, 2, 2), make_theory("purity"), 2)
    assert np.allclose(est.sequence, [0, 0], atol=1e-6) and abs(est.anchor) < 1e-6


@pytest.mark.parametrize("p", [0.2, 0.7])
def test_asymptotic_anchor_below_one_shot(p):
    c = depolarizing(p)
    est = asymptotic_estimate(c, make_theory("purity"), 1)
    assert abs(est.anchor - channel_entropy(c).value / 2) < 1e-9
    assert est.normalized[0] >= est.anchor - 1e-6

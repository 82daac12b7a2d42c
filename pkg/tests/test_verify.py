import numpy as np
import pytest

from chanres.theories import get_target
from chanres.verify import (collapse_suite, monotonicity_suite, ordering_suite, qubit_theory, random_test_channel,
                            reproduce_table)


@pytest.mark.parametrize("tid", ["purity", "cc", "qc", "nu", "coh", "ent"])
def test_ordering_zero_error(tid):
    rep = ordering_suite(qubit_theory(tid), trials=4, eps_values=(0.0,))
    assert rep.passed, rep.failures[:2]


def test_ordering_reports_each_link():
    rep = ordering_suite(qubit_theory("qc"), trials=1, eps_values=(0.0,))
    assert {c.name for c in rep.checks} == {"lr>=max", "max>=h_lo", "h_hi>=h_lo", "h_lo>=htilde", "h_lo>=hhat"}


@pytest.mark.parametrize("key", [("coh", "gplus"), ("ent", "gphi"), ("nu", "g2")])
def test_collapse_preparations(key):
    rep = collapse_suite(get_target(*key), restarts=2)
    assert rep.passed and rep.checks


def test_monotonicity_small():
    rep = monotonicity_suite(qubit_theory("nu"), trials=4, channels=2)
    assert rep.passed and len(rep.checks) == 4


def test_random_test_channel_dims():
    th = qubit_theory("ent")
    c = random_test_channel(th, np.random.default_rng(0))
    assert c.dims == th.dims == (2, 2)


def test_reproduce_rows_have_kinds():
    rows = reproduce_table(n_max=1, targets=[("nu", "g2")])
    assert {r.measure for r in rows} == {"max", "htilde"}
    assert all(r.passed and r.bound_kind for r in rows)

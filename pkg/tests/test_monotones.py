import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from scipy.optimize import linprog, minimize

from chanres.core import Channel, ChoiMatrix, apply_channel
from chanres.errors import DimensionMismatch, EpsilonOutOfRange
from chanres.monotones import (MonotoneReport, channel_entropy, diamond_distance, dh_assisted, dh_channel_interval,
                               dh_choi, dh_scalar, dh_state, dh_unassisted, dmax, fidelity_measures,
                               log_robustness, measure, regularized_m)
from chanres.superchannels import random_channel, random_free_channel, random_unitary
from chanres.theories import THEORY_IDS, get_target, is_free, make_theory
from chanres.verify import qubit_theory

PAULIS = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
IDENT = Channel.from_unitary(np.eye(2)).choi


def depolarizing(p):
    return Channel.from_kraus([np.sqrt(1 - 3 * p / 4) * PAULIS[0]] + [np.sqrt(p / 4) * s for s in PAULIS[1:]]).choi


def _state(rng, d, rank=None):
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = a @ a.conj().T
    return m / np.trace(m).real


# --- diamond distance -------------------------------------------------------

@pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
def test_diamond_identity_vs_depolarizing(p):
    assert abs(diamond_distance(IDENT, depolarizing(p)) - 3 * p / 4) < 1e-6


def test_diamond_identity_vs_z():
    z = Channel.from_unitary(PAULIS[3]).choi
    assert abs(diamond_distance(IDENT, z) - 1.0) < 1e-6


@pytest.mark.parametrize("theta", [0.3, 1.1, 2.5])
def test_diamond_phase_rotation(theta):
    """For ``diag(1, e^{i theta})`` the distance to the identity is ``sin(theta/2)``."""
    u = Channel.from_unitary(np.diag([1, np.exp(1j * theta)])).choi
    assert abs(diamond_distance(IDENT, u) - math.sin(theta / 2)) < 1e-6


def _brute_force_diamond(a, b, rng, starts=6):
    d_a, d_b = a.dims

    def neg(x):
        psi = x[: d_a * d_a] + 1j * x[d_a * d_a:]
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        diff = apply_channel(a, rho, d_a) - apply_channel(b, rho, d_a)
        return -0.5 * np.abs(np.linalg.eigvalsh(diff)).sum()

    best = 0.0
    for _ in range(starts):
        res = minimize(neg, rng.normal(size=2 * d_a * d_a), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxfev": 20000})
        best = max(best, -res.fun)
    return best


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_diamond_against_input_search(seed):
    rng = np.random.default_rng(seed)
    a, b = random_channel(rng, 2, 2).choi, random_channel(rng, 2, 2).choi
    sdp = diamond_distance(a, b)
    brute = _brute_force_diamond(a, b, rng)
    assert brute <= sdp + 1e-7
    assert abs(sdp - brute) < 1e-4


def test_diamond_dims_must_match():
    with pytest.raises(DimensionMismatch):
        diamond_distance(IDENT, ChoiMatrix(np.eye(6) / 6, 2, 3))


# --- state hypothesis testing ------------------------------------------------

@hsettings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), eps=st.sampled_from([0.0, 0.01, 0.1, 0.3]))
def test_dh_state_sdp_matches_scalar_dual(seed, eps):
    rng = np.random.default_rng(seed)
    rho, sigma = _state(rng, 3, rank=2), _state(rng, 3)
    assert abs(dh_state(rho, sigma, eps) - dh_scalar(rho, sigma, eps)) < 1e-5


@hsettings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), eps=st.sampled_from([0.0, 0.05, 0.2]))
def test_dh_commuting_neyman_pearson(seed, eps):
    """Diagonal states reduce to a linear program over test weights."""
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    lp = linprog(q, A_ub=[-p], b_ub=[-(1 - eps)], bounds=[(0, 1)] * 4, method="highs")
    want = -math.log2(lp.fun)
    assert abs(dh_state(np.diag(p), np.diag(q), eps) - want) < 1e-6
    assert abs(dh_scalar(np.diag(p), np.diag(q), eps) - want) < 1e-6


def test_dh_zero_eps_projector_formula():
    rng = np.random.default_rng(7)
    rho, sigma = _state(rng, 3, rank=1), _state(rng, 3)
    want = -math.log2(np.trace(rho @ sigma).real / np.trace(rho @ rho).real)
    assert abs(dh_state(rho, sigma) - want) < 1e-6


def test_dh_state_kernel_is_infinite():
    assert math.isinf(dh_state(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 0.1))


def test_dh_equal_states():
    rho = np.diag([0.3, 0.7])
    assert abs(dh_state(rho, rho, 0.2) + math.log2(0.8)) < 1e-6


def test_epsilon_range():
    with pytest.raises(EpsilonOutOfRange):
        dh_state(np.eye(2) / 2, np.eye(2) / 2, 1.0)
    with pytest.raises(EpsilonOutOfRange):
        dmax(IDENT, make_theory("purity"), -0.1)


# --- channel measures -------------------------------------------------------

def test_purity_identity_constants():
    th = make_theory("purity")
    assert abs(dmax(IDENT, th).value - 2) < 1e-6
    assert abs(dh_choi(IDENT, th).value - 2) < 1e-6
    lr = log_robustness(IDENT, th)
    assert math.isinf(lr.value) and lr.certificate is not None


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.3])
def test_dh_choi_identity_purity_closed_form(eps):
    """Against ``pi (x) pi`` the best test is ``(1-eps) Phi``, so beta = (1-eps)/4."""
    got = dh_choi(IDENT, make_theory("purity"), eps).value
    assert abs(got - (2 - math.log2(1 - eps))) < 1e-6


def test_qc_identity_interval_collapses():
    lo, hi = dh_channel_interval(IDENT, make_theory("qc"), 0.0, restarts=4)
    assert abs(lo.value - 1) < 1e-5 and abs(hi.value - 1) < 1e-5
    assert lo.bound_kind == hi.bound_kind == "exact"


def test_identity_purity_seesaw_families():
    th = make_theory("purity")
    assert abs(dh_unassisted(IDENT, th, restarts=4).value - 1) < 1e-5
    assert abs(dh_assisted(IDENT, th, restarts=4).value - 2) < 1e-5


def test_seesaw_is_deterministic():
    rng = np.random.default_rng(11)
    c = random_channel(rng, 2, 2).choi
    th = make_theory("coh")
    a = dh_unassisted(c, th, 0.05, seed=3, restarts=2, max_iter=2).value
    b = dh_unassisted(c, th, 0.05, seed=3, restarts=2, max_iter=2).value
    assert a == b


def test_gplus_coherence_measures():
    t = get_target("coh", "gplus")
    th = t.theory()
    for name in ("max", "htilde", "hhat", "h"):
        assert abs(measure(name, t.channel, th).value - 1) < 1e-5


@pytest.mark.parametrize("tid", THEORY_IDS)
def test_free_channels_have_zero_measures(tid):
    th = qubit_theory(tid)
    c = random_free_channel(th, np.random.default_rng(5))
    assert dmax(c, th).value < 1e-6
    if th.robustness_finite:
        assert log_robustness(c, th).value < 1e-6


@hsettings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), tid=st.sampled_from(THEORY_IDS))
def test_robustness_dominates_and_faithful(seed, tid):
    th = qubit_theory(tid)
    c = random_channel(np.random.default_rng(seed), th.dim_in, th.dim_out).choi
    c = ChoiMatrix(c.data, th.dim_in, th.dim_out)
    lr, mx = log_robustness(c, th).value, dmax(c, th).value
    assert lr >= mx - 1e-6
    if 1e-7 < mx < 1e-4:
        return  # too close to the boundary to compare two different thresholds
    assert (mx <= 1e-7) == is_free(c, th, tol=1e-6).free


@pytest.mark.parametrize("tid", ["purity", "qc", "coh", "nu"])
def test_smoothing_non_increasing(tid):
    th = make_theory(tid)
    for p in (0.0, 0.2, 0.6):
        c = depolarizing(p)
        names = ["max"] + (["lr"] if th.robustness_finite else [])
        for name in names:
            vals = [measure(name, c, th, eps).value for eps in (0.0, 0.01, 0.05, 0.1)]
            assert all(b <= a + 1e-7 for a, b in zip(vals, vals[1:])), (name, p, vals)


def test_infinite_report_needs_certificate():
    with pytest.raises(ValueError):
        MonotoneReport("lr", math.inf, "exact")


# --- fidelity measures --------------------------------------------------------

@pytest.mark.parametrize("seed", range(4))
def test_fidelity_relation_coherence(seed):
    u = Channel.from_unitary(random_unitary(np.random.default_rng(seed), 2)).choi
    rep = fidelity_measures(u, make_theory("coh"), seed=seed, restarts=2)
    assert rep.unitary
    assert abs(-math.log2(rep.f_tilde) - dh_choi(u, make_theory("coh")).value) < 1e-5
    assert rep.f <= rep.f_tilde + 1e-6 or rep.f_kind == "heuristic"


def test_fidelity_relation_entanglement():
    rng = np.random.default_rng(9)
    th = make_theory("ent", (2, 2), (2, 2))
    u = Channel.from_unitary(np.kron(random_unitary(rng, 2), random_unitary(rng, 2)) @ np.eye(4)[[0, 1, 3, 2]])
    f = fidelity_measures(u.choi, th, restarts=1)
    assert abs(-math.log2(f.f_tilde) - f.dh_tilde) < 1e-5


# --- channel entropy ----------------------------------------------------------

def _shannon(p):
    p = np.asarray(p)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def test_channel_entropy_identity():
    assert abs(channel_entropy(IDENT).value - 2) < 1e-6


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_channel_entropy_depolarizing(p):
    want = 2 - _shannon([1 - 3 * p / 4, p / 4, p / 4, p / 4])
    assert abs(channel_entropy(depolarizing(p)).value - want) < 1e-5


# --- regularised constants ----------------------------------------------------

@pytest.mark.parametrize("tid,key,name,n,value", [
    ("purity", "id2", "max", 1, 2), ("purity", "id2", "max", 2, 2),
    ("cc", "id2", "max", 1, 2), ("ent", "gphi", "lr", 1, 1), ("qc", "id2", "lr", 2, 1),
])
def test_regularized_constants(tid, key, name, n, value):
    r = regularized_m(name, get_target(tid, key), n)
    assert abs(r.value - value) < 1e-5
    assert r.agrees is True


def test_lr_out_of_reach_returns_infinite_with_radius():
    from chanres.verify import qubit_theory, random_test_channel
    th = qubit_theory("nu")
    c = random_test_channel(th, np.random.default_rng([0, 26]))
    rep = log_robustness(c, th, 0.05)
    assert math.isinf(rep.value) and rep.status == "infeasible"
    assert rep.extras["span_radius"] > 0.05

"""Resource measures of channels.

All logarithms are base 2.  Every measure is returned as a
:class:`MonotoneReport` carrying its bound semantics:

``exact``      the optimum of a convex program over the exact free set
``lower``      a certified lower bound (relaxed free set, or max-min probe)
``upper``      a certified upper bound
``heuristic``  a local-search estimate with no certificate

Conventions for a channel ``N: A -> B`` with trace-one Choi matrix ``J``:

* generalized robustness ``D_max^eps = log min{Tr Y : Y in cone(F), Y >= J'}``
* free robustness ``LR^eps = log min{Tr Y : Y, Y - J' in cone(F)}``
* ``J'`` ranges over Choi matrices within diamond distance ``eps`` of ``J``,
  imposed jointly through the diamond-norm dual
  ``Z >= 0, Z >= d_A (J' - J), Tr_B Z <= eps I``
* hypothesis testing ``D_H^eps(rho||sigma) = -log min{Tr A sigma : 0 <= A <= I, Tr A rho >= 1 - eps}``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import conic
from .config import settings
from .conic import Affine, ConicProblem
from .core import (ChoiMatrix, as_choi, partial_trace, tensor_power, _psd_sqrt)
from .errors import (DimensionGuardExceeded, DimensionMismatch, EpsilonOutOfRange, NumericalFailure,
                     SolverFailure)
from .theories import TheorySpec, Target, free_cone

__all__ = [
    "MEASURES",
    "MonotoneReport",
    "diamond_distance",
    "log_robustness",
    "dmax",
    "dh_state",
    "dh_scalar",
    "dh_choi",
    "dh_unassisted",
    "dh_assisted",
    "dh_channel_interval",
    "FidelityReport",
    "fidelity_measures",
    "channel_entropy",
    "RegularizedValue",
    "regularized_m",
    "measure",
]

MEASURES = ("lr", "max", "h", "htilde", "hhat")
CSV_FIELDS = ("theory", "measure", "epsilon", "value", "bound_kind", "relaxed", "gap")


@dataclass
class MonotoneReport:
    measure: str
    value: float
    bound_kind: str
    epsilon: float = 0.0
    relaxed: bool = False
    certificate: np.ndarray | None = field(default=None, repr=False)
    gap: float = 0.0
    status: str = "optimal"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value < 0 and self.value > -1e-7:
            self.value = 0.0
        if math.isinf(self.value) and self.certificate is None:
            raise ValueError("an infinite measure requires an infeasibility certificate")

    def __float__(self):
        return float(self.value)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def row(self, theory: str = "") -> dict:
        return {"theory": theory, "measure": self.measure, "epsilon": repr(float(self.epsilon)),
                "value": "inf" if math.isinf(self.value) else repr(float(self.value)),
                "bound_kind": self.bound_kind, "relaxed": str(bool(self.relaxed)).lower(),
                "gap": f"{self.gap:.3e}"}


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise EpsilonOutOfRange(f"epsilon must lie in [0, 1), got {eps}")
    return eps


def _choi(x) -> ChoiMatrix:
    if isinstance(x, np.ndarray):
        raise TypeError("pass a Channel or ChoiMatrix, not a bare array")
    c = as_choi(x)
    if c.data.shape[0] > settings.max_sdp_dim:
        raise DimensionGuardExceeded(
            f"Choi dimension {c.data.shape[0]} exceeds the SDP guard {settings.max_sdp_dim}")
    return c


def _kind(theory: TheorySpec, default: str = "exact") -> str:
    return "lower" if theory.relaxed and default == "exact" else default


def _ok(sol, what: str):
    if sol.status in ("optimal", "inaccurate"):
        return sol
    raise SolverFailure(f"{what}: solver returned status {sol.status}")


# ---------------------------------------------------------------------------
# diamond norm and smoothing
# ---------------------------------------------------------------------------

def _diamond_ball(prob: ConicProblem, j: np.ndarray, d_a: int, d_b: int, eps: float) -> Affine:
    """Affine Choi variable constrained to the ``eps`` diamond ball around ``j``."""
    if eps == 0:
        return conic.const(j)
    n = d_a * d_b
    jp = prob.hermitian("J_smooth", n)
    prob.add_eq(jp.partial_trace([d_a, d_b], 1), np.eye(d_a) / d_a)
    z = prob.hermitian("Z_smooth", n)
    prob.add_psd(z - (jp - j) * d_a)
    prob.add_psd(z.partial_trace([d_a, d_b], 1) * -1.0 + eps * np.eye(d_a))
    return jp


def diamond_distance(n_chan, m_chan) -> float:
    """Half the diamond norm of ``N - M``.

    Solved through ``min ||Tr_B Z||_inf`` over ``Z >= 0, Z >= J_N - J_M``
    with unnormalised Choi matrices.
    """
    a, b = _choi(n_chan), _choi(m_chan)
    if a.dims != b.dims:
        raise DimensionMismatch(f"channel dims differ: {a.dims} vs {b.dims}")
    d_a, d_b = a.dims
    prob = ConicProblem()
    z = prob.hermitian("Z", d_a * d_b)
    s = prob.scalar("s")
    prob.add_psd(z - d_a * (a.data - b.data))
    prob.add_psd(s.kron(np.eye(d_a)) - z.partial_trace([d_a, d_b], 1))
    prob.minimize(s)
    sol = _ok(conic.solve(prob), "diamond distance")
    return float(min(max(sol.objective, 0.0), 1.0))


# ---------------------------------------------------------------------------
# robustness measures
# ---------------------------------------------------------------------------

def _robustness(n_chan, theory: TheorySpec, eps: float, free_noise: bool) -> MonotoneReport:
    eps = _check_eps(eps)
    c = theory.check(_choi(n_chan))
    d_a, d_b = c.dims
    prob = ConicProblem()
    jp = _diamond_ball(prob, c.data, d_a, d_b, eps)
    y = prob.hermitian("Y", d_a * d_b, psd=False)
    cone = free_cone(theory)
    cone.apply(prob, y)
    if free_noise:
        cone.apply(prob, y - jp)
    else:
        prob.add_psd(y - jp)
    prob.minimize(y.trace().real)
    name = "lr" if free_noise else "max"
    try:
        sol = conic.solve(prob)
    except SolverFailure:
        sol = None
    if sol is None or sol.status == "unbounded":
        # Tr Y >= 0 on the cone, so a dual ray or a breakdown points at an infeasible program.
        # Settle it with the smallest ball radius that reaches the span of the free cone.
        radius = _span_radius(c.data, theory) if free_noise else 0.0
        if radius <= eps + settings.accept_tol:
            raise SolverFailure(f"{name}: robustness program failed on a feasible instance")
        return MonotoneReport(name, math.inf, _kind(theory), eps, theory.relaxed, np.array([radius]), 0.0,
                              "infeasible", {"span_radius": radius})
    if sol.status == "infeasible":
        cert = sol.certificate if sol.certificate is not None else np.zeros(1)
        return MonotoneReport(name, math.inf, _kind(theory), eps, theory.relaxed, cert, 0.0, "infeasible")
    _ok(sol, name)
    value = math.log2(max(sol.objective, 1.0))
    return MonotoneReport(name, value, _kind(theory), eps, theory.relaxed, sol.primal["Y"], sol.gap, sol.status,
                          {"free_choi": sol.primal["Y"] / max(sol.objective, 1e-300)})


def _span_radius(j: np.ndarray, theory: TheorySpec) -> float:
    """Smallest diamond radius around ``j`` containing a channel in ``cone - cone``."""
    d_a, d_b = theory.dims
    prob = ConicProblem()
    r = prob.scalar("r")
    jp = prob.hermitian("J_smooth", d_a * d_b)
    prob.add_eq(jp.partial_trace([d_a, d_b], 1), np.eye(d_a) / d_a)
    z = prob.hermitian("Z_smooth", d_a * d_b)
    prob.add_psd(z - (jp - j) * d_a)
    prob.add_psd(z.partial_trace([d_a, d_b], 1) * -1.0 + r.kron(np.eye(d_a)))
    cone = free_cone(theory)
    y1 = prob.hermitian("Y1", d_a * d_b, psd=False)
    y2 = prob.hermitian("Y2", d_a * d_b, psd=False)
    cone.apply(prob, y1)
    cone.apply(prob, y2)
    prob.add_eq(y1 - y2 - jp)
    prob.minimize(r)
    return float(_ok(conic.solve(prob), "span radius").objective)


def log_robustness(n_chan, theory: TheorySpec, eps: float = 0.0) -> MonotoneReport:
    """Smoothed logarithmic free robustness; ``+inf`` when the free cone cannot absorb the channel."""
    return _robustness(n_chan, theory, eps, free_noise=True)


def dmax(n_chan, theory: TheorySpec, eps: float = 0.0) -> MonotoneReport:
    """Smoothed generalized robustness in log form (max-relative entropy to the free set)."""
    return _robustness(n_chan, theory, eps, free_noise=False)


# ---------------------------------------------------------------------------
# hypothesis testing
# ---------------------------------------------------------------------------

def _support(rho: np.ndarray, tol: float | None = None) -> np.ndarray:
    tol = settings.rank_tol if tol is None else tol
    w, v = np.linalg.eigh(rho)
    keep = w > tol * max(1.0, w[-1])
    return v[:, keep] @ v[:, keep].conj().T


def dh_state(rho, sigma, eps: float = 0.0) -> float:
    """State hypothesis-testing relative entropy, solved as a semidefinite program.

    Returns ``inf`` when a test supported on the kernel of ``sigma``
    accepts ``rho`` with probability at least ``1 - eps``.
    """
    eps = _check_eps(eps)
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"state shapes differ: {rho.shape} vs {sigma.shape}")
    kernel = np.eye(rho.shape[0]) - _support(sigma)
    if np.trace(kernel @ rho).real >= 1 - eps - 1e-12:
        return math.inf
    if eps == 0:
        # {0 <= A <= I, Tr A rho >= 1} has no interior; its minimiser is the support projector
        beta = float(np.trace(_support(rho) @ sigma).real)
        return math.inf if beta <= 0 else -math.log2(beta)
    d = rho.shape[0]
    prob = ConicProblem()
    a = prob.hermitian("A", d)
    prob.add_psd(a * -1.0 + np.eye(d))
    prob.add_nonneg(a.inner(rho).real - (1 - eps))
    prob.minimize(a.inner(sigma).real)
    sol = _ok(conic.solve(prob), "hypothesis test")
    beta = sol.objective
    if beta <= 0:
        return math.inf
    return -math.log2(beta)


def _beta_scalar(rho: np.ndarray, sigma: np.ndarray, eps: float) -> float:
    """Optimal type-II error via ``max_{t>=0} t(1-eps) - Tr(t rho - sigma)_+``."""
    if eps == 0:
        return float(np.trace(_support(rho) @ sigma).real)

    def neg(t):
        w = np.linalg.eigvalsh(t * rho - sigma)
        return -(t * (1 - eps) - w[w > 0].sum())

    hi = 1.0
    for _ in range(200):
        # the slope turns negative once the positive part captures more than 1 - eps of rho
        w, v = np.linalg.eigh(hi * rho - sigma)
        pos = v[:, w > 0]
        if np.trace(pos.conj().T @ rho @ pos).real > 1 - eps:
            break
        hi *= 2.0
    res = minimize_scalar(neg, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-12 * hi})
    return max(-res.fun, -neg(0.0), 0.0)


def dh_scalar(rho, sigma, eps: float = 0.0) -> float:
    """Hypothesis-testing relative entropy from its one-parameter dual (no SDP)."""
    eps = _check_eps(eps)
    beta = _beta_scalar(np.asarray(rho, dtype=complex), np.asarray(sigma, dtype=complex), eps)
    return math.inf if beta <= 1e-300 else -math.log2(beta)


def _max_beta(prob: ConicProblem, rho: np.ndarray, sigma: Affine, eps: float) -> Affine:
    """Objective for ``max_sigma beta(rho, sigma)`` when ``sigma`` is affine in the variables."""
    if eps == 0:
        return sigma.inner(_support(rho)).real
    d = rho.shape[0]
    t = prob.scalar("t")
    w = prob.hermitian("W", d)
    prob.add_psd(sigma - t.kron(rho) + w)
    return t * (1 - eps) - w.trace().real


def dh_choi(n_chan, theory: TheorySpec, eps: float = 0.0) -> MonotoneReport:
    """Hypothesis-testing measure with the maximally entangled input.

    ``min_M D_H(J_N || J_M)`` over free ``M`` is solved as one program by
    dualising the inner test: for ``eps > 0`` it maximises
    ``t(1-eps) - Tr W`` subject to ``J_M - t J_N + W >= 0``; for ``eps = 0``
    it maximises the overlap of ``J_M`` with the support of ``J_N``.
    """
    eps = _check_eps(eps)
    c = theory.check(_choi(n_chan))
    d_a, d_b = c.dims
    prob = ConicProblem()
    y = prob.hermitian("Y", d_a * d_b, psd=False)
    free_cone(theory).apply(prob, y, trace=1)
    prob.maximize(_max_beta(prob, c.data, y, eps))
    sol = _ok(conic.solve(prob), "dh_choi")
    beta = sol.objective
    value = math.inf if beta <= 0 else -math.log2(min(beta, 1.0))
    return MonotoneReport("htilde", value, _kind(theory), eps, theory.relaxed, sol.primal["Y"], sol.gap,
                          sol.status, {"free_choi": sol.primal["Y"], "beta": beta})


# ---------------------------------------------------------------------------
# seesaw for input-optimised hypothesis testing
# ---------------------------------------------------------------------------

def _output_map(psi: np.ndarray, d_a: int, d_b: int, d_r: int) -> np.ndarray:
    """``W`` with ``(N (x) I_R)(psi) = d_A W^dag J W`` for pure ``psi`` on ``A (x) R``."""
    v = psi.reshape(d_a, d_r)
    w = np.einsum("ir,cb->icbr", v.conj(), np.eye(d_b))
    return w.reshape(d_a * d_b, d_b * d_r)


def _output(j: np.ndarray, psi: np.ndarray, d_a: int, d_b: int, d_r: int) -> np.ndarray:
    w = _output_map(psi, d_a, d_b, d_r)
    out = d_a * (w.conj().T @ j @ w)
    return (out + out.conj().T) / 2


def _fixed_input_step(j: np.ndarray, theory: TheorySpec, psi: np.ndarray, eps: float, d_r: int):
    """min over free M of ``D_H((N(x)I)psi || (M(x)I)psi)``; returns (value, free Choi)."""
    d_a, d_b = theory.dims
    rho = _output(j, psi, d_a, d_b, d_r)
    w = _output_map(psi, d_a, d_b, d_r)
    prob = ConicProblem()
    y = prob.hermitian("Y", d_a * d_b, psd=False)
    free_cone(theory).apply(prob, y, trace=1)
    sigma = (w.conj().T @ y @ w) * d_a
    prob.maximize(_max_beta(prob, rho, sigma, eps))
    sol = _ok(conic.solve(prob), "seesaw step")
    beta = min(max(sol.objective, 0.0), 1.0)
    value = math.inf if beta <= 0 else -math.log2(beta)
    return value, sol.primal["Y"]


def _vec_to_state(x: np.ndarray) -> np.ndarray:
    n = x.size // 2
    psi = x[:n] + 1j * x[n:]
    nrm = np.linalg.norm(psi)
    return psi / nrm if nrm > 0 else np.eye(n)[0].astype(complex)


def _best_input(j: np.ndarray, m: np.ndarray, theory: TheorySpec, eps: float, d_r: int, starts):
    """Local maximisation of ``D_H(N(psi) || M(psi))`` over pure inputs from several starts."""
    d_a, d_b = theory.dims

    def objective(x):
        psi = _vec_to_state(x)
        rho = _output(j, psi, d_a, d_b, d_r)
        sigma = _output(m, psi, d_a, d_b, d_r)
        beta = _beta_scalar(rho, sigma, eps)
        return math.log2(max(beta, 1e-300))

    best_val, best_psi = -math.inf, None
    for psi0 in starts:
        x0 = np.concatenate([psi0.real, psi0.imag])
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-11, "maxfev": 400 * x0.size})
        for x in (res.x, x0):
            val = -objective(x)
            if val > best_val:
                best_val, best_psi = val, _vec_to_state(x)
    return best_val, best_psi


def _random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _seesaw(n_chan, theory: TheorySpec, eps: float, seed: int, ancilla_dim: int, restarts: int | None,
            max_iter: int | None, measure: str) -> MonotoneReport:
    eps = _check_eps(eps)
    c = theory.check(_choi(n_chan))
    d_a, d_b = c.dims
    restarts = settings.seesaw_restarts if restarts is None else restarts
    max_iter = settings.seesaw_max_iter if max_iter is None else max_iter
    rng = np.random.default_rng(seed)
    dim = d_a * ancilla_dim
    starts = []
    if ancilla_dim == d_a:
        starts.append(np.eye(d_a).reshape(-1).astype(complex) / math.sqrt(d_a))
    else:
        starts.append(np.eye(dim)[0].astype(complex))
    starts += [_random_state(rng, dim) for _ in range(max(restarts - 1, 0))]

    if dim == 1:
        value, y = _fixed_input_step(c.data, theory, starts[0], eps, ancilla_dim)
        return MonotoneReport(measure, value, _kind(theory), eps, theory.relaxed, y, 0.0, "optimal",
                              {"upper_estimate": value, "iterations": 1, "converged": True})

    # probe every start once, keep the best lower value
    best_v, best_psi, best_m = -math.inf, None, None
    for psi in starts:
        v, y = _fixed_input_step(c.data, theory, psi, eps, ancilla_dim)
        if v > best_v:
            best_v, best_psi, best_m = v, psi, y
    upper, converged, it = math.inf, False, 0
    m = best_m
    for it in range(1, max_iter + 1):
        local = [best_psi] + [_random_state(rng, dim) for _ in range(2)]
        upper, psi = _best_input(c.data, m, theory, eps, ancilla_dim, local)
        v, y = _fixed_input_step(c.data, theory, psi, eps, ancilla_dim)
        improved = v > best_v + settings.seesaw_tol
        if v > best_v:
            best_v, best_psi = v, psi
        m = y
        if upper - best_v <= settings.seesaw_tol or not improved:
            converged = upper - best_v <= 1e-6
            break
    status = "optimal" if converged else "inaccurate"
    return MonotoneReport(measure, best_v, "heuristic", eps, theory.relaxed, m, 0.0, status,
                          {"upper_estimate": upper, "iterations": it, "converged": converged,
                           "certified_lower": best_v, "best_input": best_psi})


def dh_unassisted(n_chan, theory: TheorySpec, eps: float = 0.0, seed: int = 0, restarts: int | None = None,
                  max_iter: int | None = None) -> MonotoneReport:
    """Seesaw estimate of ``min_M max_psi D_H(N(psi) || M(psi))`` over ancilla-free pure inputs.

    The value is ``max_psi min_M`` over the probed inputs, so it never
    exceeds the true measure; the last ``upper_estimate`` is a local-search
    value of the outer maximum for the final free channel.
    """
    return _seesaw(n_chan, theory, eps, seed, 1, restarts, max_iter, "hhat")


def dh_assisted(n_chan, theory: TheorySpec, eps: float = 0.0, seed: int = 0, restarts: int | None = None,
                max_iter: int | None = None) -> MonotoneReport:
    """Same seesaw with an ancilla of the input dimension (probes of the full channel measure)."""
    d_a = theory.dim_in
    return _seesaw(n_chan, theory, eps, seed, d_a, restarts, max_iter, "h")


def dh_channel_interval(n_chan, theory: TheorySpec, eps: float = 0.0, seed: int = 0,
                        restarts: int | None = None,
                        max_iter: int | None = None) -> tuple[MonotoneReport, MonotoneReport]:
    """Certified bracket ``[lo, hi]`` for the channel hypothesis-testing measure.

    ``lo`` is the best of the Choi-input program and the two seesaw probe
    families (each a max-min value, hence below the min-max).  ``hi`` is
    ``D_max^0 + log 1/(1-eps)``, which dominates the measure because
    ``D_H^eps(rho||sigma) <= D_max(rho||sigma) + log 1/(1-eps)`` for every input.
    """
    eps = _check_eps(eps)
    parts = {
        "htilde": dh_choi(n_chan, theory, eps),
        "hhat": dh_unassisted(n_chan, theory, eps, seed, restarts, max_iter),
        "assisted": dh_assisted(n_chan, theory, eps, seed + 1, restarts, max_iter),
    }
    lo_val = max(p.value for p in parts.values())
    src = max(parts, key=lambda k: parts[k].value)
    top = dmax(n_chan, theory, 0.0)
    hi_val = top.value - math.log2(1 - eps)
    consistent = lo_val <= hi_val + 1e-7
    lo = MonotoneReport("h", lo_val, "lower", eps, theory.relaxed, parts[src].certificate, parts[src].gap,
                        "optimal" if consistent else "inaccurate",
                        {"source": src, "parts": {k: v.value for k, v in parts.items()}, "consistent": consistent})
    hi = MonotoneReport("h", hi_val, "upper", eps, theory.relaxed, top.certificate, top.gap, top.status,
                        {"source": "dmax0", "consistent": consistent})
    if math.isclose(lo_val, hi_val, abs_tol=1e-6) and not theory.relaxed:
        lo.bound_kind = hi.bound_kind = "exact"
    return lo, hi


# ---------------------------------------------------------------------------
# fidelity measures
# ---------------------------------------------------------------------------

@dataclass
class FidelityReport:
    f: float
    f_tilde: float
    f_kind: str
    f_tilde_kind: str
    unitary: bool
    dh_tilde: float
    relation_gap: float
    relaxed: bool = False
    extras: dict = field(default_factory=dict)


def _root_fidelity(prob: ConicProblem, a: np.ndarray, b: Affine) -> Affine:
    """Objective whose maximum is ``||sqrt(a) sqrt(b)||_1`` for constant ``a``.

    Uses ``[[a, X], [X^dag, b]] >= 0`` with ``X`` restricted to the support
    of ``a``, so the block has an interior even for pure ``a``.
    """
    w, v = np.linalg.eigh(a)
    keep = w > settings.rank_tol * max(1.0, w[-1])
    v = v[:, keep]
    r, n = v.shape[1], a.shape[0]
    # general complex r x n block: first r rows of X + i Xr with X, Xr Hermitian
    x = prob.hermitian(f"X{len(prob.blocks)}", n, psd=False)
    xr = prob.hermitian(f"Xr{len(prob.blocks)}", n, psd=False)
    cross = np.eye(n)[:r] @ (x + xr * 1j)
    a_small = np.diag(w[keep]).astype(complex)
    prob.add_psd(conic.bmat([[conic.const(a_small), cross], [cross.H, b]]))
    # X_full = V cross, Tr X_full = Tr(cross V)
    return (cross @ v).trace().real


def _max_fidelity_choi(j: np.ndarray, theory: TheorySpec):
    """``max_M F(J_N, J_M)`` over free ``M`` via the root-fidelity block program."""
    n = j.shape[0]
    prob = ConicProblem()
    y = prob.hermitian("Y", n, psd=False)
    free_cone(theory).apply(prob, y, trace=1)
    prob.maximize(_root_fidelity(prob, j, y))
    sol = _ok(conic.solve(prob), "fidelity program")
    root = max(sol.objective, 0.0)
    return root ** 2, sol.primal["Y"]


def _state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    s = _psd_sqrt(rho)
    w = np.linalg.eigvalsh(s @ sigma @ s)
    return float(np.sqrt(np.clip(w, 0, None)).sum() ** 2)


def fidelity_measures(u_chan, theory: TheorySpec, seed: int = 0, restarts: int = 8) -> FidelityReport:
    """``F_T`` (alternating estimate) and ``F~_T`` (exact program) of a channel.

    For unitary channels ``-log F~_T`` must coincide with :func:`dh_choi`
    at ``eps = 0``; the discrepancy is returned as ``relation_gap``.
    """
    c = theory.check(_choi(u_chan))
    d_a, d_b = c.dims
    f_tilde, y = _max_fidelity_choi(c.data, theory)
    unitary = np.linalg.eigvalsh(c.data)[-1] > 1 - 1e-9
    ht = dh_choi(c, theory, 0.0).value
    rel = abs(-math.log2(max(f_tilde, 1e-300)) - ht)

    # F_T: fix M, minimise over inputs with ancilla; fix input, maximise over M
    rng = np.random.default_rng(seed)
    dim = d_a * d_a
    m = y
    best = math.inf
    for _ in range(10):
        def obj(x):
            psi = _vec_to_state(x)
            return _state_fidelity(_output(c.data, psi, d_a, d_b, d_a), _output(m, psi, d_a, d_b, d_a))
        cands = []
        for k in range(restarts):
            psi0 = np.eye(d_a).reshape(-1).astype(complex) / math.sqrt(d_a) if k == 0 else _random_state(rng, dim)
            x0 = np.concatenate([psi0.real, psi0.imag])
            res = minimize(obj, x0, method="Nelder-Mead", options={"maxfev": 300 * x0.size})
            cands.append((res.fun, _vec_to_state(res.x)))
        val, psi = min(cands, key=lambda t: t[0])
        if val >= best - 1e-9:
            best = min(best, val)
            break
        best = val
        rho = _output(c.data, psi, d_a, d_b, d_a)
        f_new, m_new = _max_fidelity_choi_input(rho, psi, theory)
        if f_new <= val + 1e-12:
            break
        m = m_new
    kind = "heuristic"
    return FidelityReport(float(best), float(f_tilde), kind, _kind(theory), bool(unitary), ht, rel, theory.relaxed,
                          {"free_choi": y})


def _max_fidelity_choi_input(rho: np.ndarray, psi: np.ndarray, theory: TheorySpec):
    d_a, d_b = theory.dims
    w = _output_map(psi, d_a, d_b, d_a)
    n = d_a * d_b
    prob = ConicProblem()
    y = prob.hermitian("Y", n, psd=False)
    free_cone(theory).apply(prob, y, trace=1)
    sigma = (w.conj().T @ y @ w) * d_a
    prob.maximize(_root_fidelity(prob, rho, sigma))
    sol = _ok(conic.solve(prob), "fidelity step")
    return max(sol.objective, 0.0) ** 2, sol.primal["Y"]


# ---------------------------------------------------------------------------
# channel entropy
# ---------------------------------------------------------------------------

def _entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-15]
    return float(-(w * np.log2(w)).sum())


def channel_entropy(n_chan, restarts: int = 4, seed: int = 0) -> MonotoneReport:
    """Channel entropy ``S(N || D)`` relative to the maximally depolarizing channel.

    Equals ``log d_B + max_sigma [S(sigma) - S(rho_BR(sigma))]`` where
    ``rho_BR`` is the output on the purification of ``sigma``; the objective
    is concave in ``sigma`` so a local ascent from the maximally mixed
    input (optimal for covariant channels) plus random starts suffices.
    """
    c = as_choi(n_chan)
    d_a, d_b = c.dims
    j = c.data

    def value(sigma):
        s = _psd_sqrt(sigma)
        k = np.kron(s, np.eye(d_b))
        out = d_a * (k @ j @ k)
        return math.log2(d_b) + _entropy(sigma) - _entropy((out + out.conj().T) / 2)

    def to_state(x):
        t = (x[: d_a * d_a] + 1j * x[d_a * d_a:]).reshape(d_a, d_a)
        m = t @ t.conj().T
        return m / np.trace(m).real

    rng = np.random.default_rng(seed)
    best = value(np.eye(d_a) / d_a)
    converged = True
    if d_a > 1:
        starts = [np.concatenate([np.eye(d_a).reshape(-1), np.zeros(d_a * d_a)])]
        starts += [rng.normal(size=2 * d_a * d_a) for _ in range(restarts)]
        for x0 in starts:
            res = minimize(lambda x: -value(to_state(x)), x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-12, "maxfev": 4000})
            best = max(best, -res.fun)
            converged = converged and res.success
    return MonotoneReport("entropy", max(best, 0.0), "exact" if converged else "heuristic", 0.0, False, None, 0.0,
                          "optimal" if converged else "inaccurate")


# ---------------------------------------------------------------------------
# dispatch and regularised values
# ---------------------------------------------------------------------------

def measure(name: str, n_chan, theory: TheorySpec, eps: float = 0.0, seed: int = 0,
            restarts: int | None = None) -> MonotoneReport:
    """Evaluate a measure by token: ``lr``, ``max``, ``h`` (interval low end), ``htilde``, ``hhat``."""
    if name == "lr":
        return log_robustness(n_chan, theory, eps)
    if name == "max":
        return dmax(n_chan, theory, eps)
    if name == "htilde":
        return dh_choi(n_chan, theory, eps)
    if name == "hhat":
        return dh_unassisted(n_chan, theory, eps, seed, restarts)
    if name == "h":
        lo, hi = dh_channel_interval(n_chan, theory, eps, seed, restarts)
        lo.extras["hi"] = hi.value
        return lo
    raise ValueError(f"unknown measure {name!r}; choose from {MEASURES}")


@dataclass
class RegularizedValue:
    measure: str
    n: int
    value: float
    analytic: float | None
    bound_kind: str
    relaxed: bool
    upper: float | None = None

    @property
    def agrees(self) -> bool | None:
        if self.analytic is None:
            return None
        return abs(self.value - self.analytic) <= 1e-5


def regularized_m(name: str, target: Target, n: int = 1, theory: TheorySpec | None = None,
                  seed: int = 0) -> RegularizedValue:
    """Zero-error measure of ``n`` target copies divided by ``n``."""
    theory = target.theory() if theory is None else theory
    chan = target.channel
    choi = tensor_power(chan, n) if n > 1 else chan.choi
    if choi.data.shape[0] > settings.max_sdp_dim:
        raise DimensionGuardExceeded(f"{n} copies of {target.key} exceed the SDP guard")
    th = theory.power(n)
    rep = measure(name, choi, th, 0.0, seed)
    upper = rep.extras.get("hi")
    return RegularizedValue(name, n, rep.value / n, target.constant(name), rep.bound_kind, th.relaxed,
                            None if upper is None else upper / n)

"""One-shot distillation and dilution brackets from monotone values.

Given a channel ``N`` and a registered target ``G`` (a unitary or a pure
state preparation), the brackets are built from

* distillation: ``n_l = max{n : n <= D_low / m_a(n)}``, ``n_u = max{n : n <= D_high / m_c(n)}``
* dilution: ``n_l = min{n : n >= D / m_a(n)}``, ``n_u = min{n : n >= D / m_c(n)}``

where ``m_x(n)`` is the zero-error measure of ``G^{(x) n}`` per copy and the
choice of ``D`` and of the two measures depends on whether the free
robustness is finite and on the kind of target:

=============================  ===================  ==========================
regime                         distillation          dilution
=============================  ===================  ==========================
finite, unitary                D_H (lo)/m_LR,        LR/m_LR, LR/m_H
                               D_H (hi)/m_H
finite, preparation            D_H~ /m_LR,           LR/m_LR, LR/m_H~
                               D_H (hi)/m_H^
infinite, unitary              -, D_H (hi)/m_H       D_max/m_max, D_max/m_H~ *
infinite, preparation          -, D_H (hi)/m_H^      D_max/m_max, D_max/m_H~ *
=============================  ===================  ==========================

``*`` requires the constant-trace condition of the target.  When every
measure involved has the same registered constant ``c`` the closed forms
``floor(D/c)`` and ``ceil(D/c)`` are used directly.  For purity with the
identity target the achievability end ``floor(D_H/2)`` is also available.

Floors and ceilings are taken after a tie-snap of ``settings.snap_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import conic
from .config import settings
from .conic import ConicProblem
from .core import tensor_power
from .monotones import (channel_entropy, dh_channel_interval, dh_choi, dmax, log_robustness,
                        measure, regularized_m)
from .theories import Target, TheorySpec, free_cone

__all__ = [
    "RateBounds",
    "distill_bounds",
    "dilute_bounds",
    "TraceCheck",
    "constant_trace_check",
    "AsymptoticEstimate",
    "asymptotic_estimate",
    "floor_snap",
    "ceil_snap",
]

CSV_FIELDS = ("task", "theory", "target", "epsilon", "n_lower", "n_upper", "theorem_tag", "flags")


def floor_snap(x: float) -> float:
    if math.isinf(x):
        return x
    return int(math.floor(x + settings.snap_tol))


def ceil_snap(x: float) -> float:
    if math.isinf(x):
        return x
    return int(max(math.ceil(x - settings.snap_tol), 0))


@dataclass
class RateBounds:
    task: str  # distill | dilute
    n_lower: int
    n_upper: float  # int or inf
    epsilon: float
    tag_lower: str
    tag_upper: str
    inputs: dict = field(default_factory=dict)  # name -> (value, bound_kind)
    flags: tuple = ()
    real_lower: float | None = None
    real_upper: float | None = None

    def __post_init__(self):
        if self.n_lower > self.n_upper:
            self.flags = tuple(self.flags) + ("inverted-bracket",)

    @property
    def theorem_tag(self) -> str:
        return f"{self.tag_lower}|{self.tag_upper}"

    @property
    def bracket(self) -> tuple:
        upper = self.n_upper if math.isinf(self.n_upper) else int(self.n_upper)
        return int(self.n_lower), upper

    def row(self, theory: str, target: str) -> dict:
        lo, hi = self.bracket
        return {"task": self.task, "theory": theory, "target": target, "epsilon": repr(float(self.epsilon)),
                "n_lower": str(lo), "n_upper": "inf" if math.isinf(hi) else str(hi),
                "theorem_tag": self.theorem_tag, "flags": ";".join(self.flags)}


class _MEvaluator:
    """Per-copy target measures, from registered constants or computed at small n."""

    def __init__(self, target: Target, seed: int = 0):
        self.target = target
        self.seed = seed
        self._cache = {}
        self.flags = set()

    def constant(self, name: str):
        return self.target.constant(name)

    def __call__(self, name: str, n: int) -> float:
        c = self.constant(name)
        if c is not None:
            return float(c)
        n_eval = n
        if n > 2:
            n_eval = 2
            self.flags.add("m-extrapolated")
        key = (name, n_eval)
        if key not in self._cache:
            try:
                self._cache[key] = regularized_m(name, self.target, n_eval, seed=self.seed).value
            except Exception:
                if n_eval == 1:
                    raise
                self.flags.add("m-extrapolated")
                self._cache[key] = self(name, 1)
        self.flags.add("m-computed")
        return self._cache[key]


def _ratio(d: float, m: float) -> float:
    if d <= 0:
        return 0.0
    if m <= 0:
        return math.inf
    return d / m


def _max_n(d: float, m_of_n, cap: int) -> tuple[int, bool]:
    """``max{n >= 0 : n <= d / m(n)}`` searched upward to ``cap``."""
    best = 0
    for n in range(1, cap + 1):
        if n <= _ratio(d, m_of_n(n)) + settings.snap_tol:
            best = n
    return best, best == cap


def _min_n(d: float, m_of_n, cap: int) -> tuple[float, bool]:
    """``min{n >= 0 : n >= d / m(n)}``; ``inf`` if not reached by ``cap``."""
    if d <= settings.snap_tol:
        return 0, False
    for n in range(1, cap + 1):
        if n >= _ratio(d, m_of_n(n)) - settings.snap_tol:
            return n, False
    return math.inf, True


def _collapse_constant(m: _MEvaluator, names) -> float | None:
    vals = [m.constant(x) for x in names]
    if any(v is None for v in vals) or len(set(vals)) != 1:
        return None
    return float(vals[0])


def _flags_from(reports: dict, theory: TheorySpec) -> list:
    flags = []
    if any(r.bound_kind == "heuristic" for r in reports.values()):
        flags.append("heuristic-inputs")
    if theory.relaxed:
        flags.append("relaxed-free-set")
    return flags


def distill_bounds(n_chan, target: Target, theory: TheorySpec, eps: float = 0.0, seed: int = 0,
                   restarts: int | None = None) -> RateBounds:
    """Bracket on the number of target copies distillable from one use of ``n_chan``."""
    finite = theory.robustness_finite
    prep = target.kind == "preparation"
    m = _MEvaluator(target, seed)
    lo, hi = dh_channel_interval(n_chan, theory, eps, seed, restarts)
    reports = {"dh_lo": lo, "dh_hi": hi}
    if prep and finite:
        ht = dh_choi(n_chan, theory, eps)
        reports["htilde"] = ht
        d_ach, m_ach, m_conv = ht.value, "lr", "hhat"
    elif finite:
        d_ach, m_ach, m_conv = lo.value, "lr", "h"
    elif theory.id == "purity" and target.key == "id2":
        d_ach, m_ach, m_conv = lo.value, "h", "h"
    else:
        d_ach, m_ach, m_conv = None, None, "hhat" if prep else "h"
    regime = f"{'finite' if finite else 'infinite'}-{target.kind}"
    flags = _flags_from(reports, theory)
    cap = settings.n_search_cap

    c = _collapse_constant(m, [x for x in (m_ach, m_conv) if x])
    if c is not None:
        real_upper = _ratio(hi.value, c)
        n_u = floor_snap(real_upper)
        n_l = floor_snap(_ratio(d_ach, c)) if d_ach is not None else 0
        tag = "closed-form"
    else:
        n_u, capped = _max_n(hi.value, lambda n: m(m_conv, n), cap)
        real_upper = _ratio(hi.value, m(m_conv, max(n_u, 1)))
        n_l = 0
        if d_ach is not None:
            n_l, _ = _max_n(d_ach, lambda n: m(m_ach, n), cap)
        if capped:
            flags.append("n-cap-reached")
        tag = "n-search"
    if theory.relaxed:
        flags.append("upper-not-certified-tight")
    flags += sorted(m.flags)
    tag_l = f"{regime}-distill-achievability-{tag}" if d_ach is not None else "trivial-zero"
    inputs = {k: (v.value, v.bound_kind) for k, v in reports.items()}
    return RateBounds("distill", int(n_l), n_u, eps, tag_l, f"{regime}-distill-converse-{tag}", inputs,
                      tuple(flags), None if d_ach is None else d_ach, real_upper)


def dilute_bounds(n_chan, target: Target, theory: TheorySpec, eps: float = 0.0, seed: int = 0,
                  trace_check: bool = True) -> RateBounds:
    """Bracket on the number of target copies needed to simulate one use of ``n_chan``."""
    finite = theory.robustness_finite
    prep = target.kind == "preparation"
    m = _MEvaluator(target, seed)
    if finite:
        rep = log_robustness(n_chan, theory, eps)
        m_low, m_up = "lr", ("htilde" if prep else "h")
    else:
        rep = dmax(n_chan, theory, eps)
        m_low, m_up = "max", "htilde"
    regime = f"{'finite' if finite else 'infinite'}-{target.kind}"
    reports = {rep.measure: rep}
    flags = _flags_from(reports, theory)
    d = rep.value
    cap = settings.n_search_cap

    trace_ok = True
    if not finite:
        if trace_check:
            chk = constant_trace_check(target, n=1)
            trace_ok = chk.passed
            if not trace_ok:
                flags.append(f"constant-trace-condition-failed[{chk.minimum:.6g},{chk.maximum:.6g}]")
        else:
            flags.append("constant-trace-condition-unchecked")

    c = _collapse_constant(m, [m_low, m_up])
    if c is not None:
        real_lower = _ratio(d, c)
        n_l = ceil_snap(real_lower)
        n_u = ceil_snap(real_lower)
        tag = "closed-form"
    else:
        n_l, capped = _min_n(d, lambda n: m(m_low, n), cap)
        real_lower = _ratio(d, m(m_low, n_l)) if math.isfinite(n_l) and n_l > 0 else _ratio(d, m(m_low, 1))
        n_l = ceil_snap(real_lower) if math.isfinite(real_lower) else math.inf
        if not finite and not trace_ok:
            n_u = math.inf
            flags.append("upper-withheld")
        else:
            n_u, capped_u = _min_n(d, lambda n: m(m_up, n), cap)
            capped = capped or capped_u
        if capped:
            flags.append("n-cap-reached")
        tag = "n-search"
    flags += sorted(m.flags)
    if math.isinf(d):
        flags.append("infinite-measure")
    n_low = n_l if math.isinf(n_l) else int(n_l)
    return RateBounds("dilute", n_low, n_u, eps, f"{regime}-dilute-converse-{tag}",
                      f"{regime}-dilute-achievability-{tag}", {rep.measure: (d, rep.bound_kind)}, tuple(flags),
                      real_lower, n_u)


@dataclass
class TraceCheck:
    passed: bool
    maximum: float
    minimum: float
    n: int

    def __bool__(self):
        return self.passed


def constant_trace_check(target: Target, theory: TheorySpec | None = None, n: int = 1) -> TraceCheck:
    """Whether ``Tr[J_C J_{G^{(x) n}}]`` is the same for every free channel ``C``.

    Two programs give the extreme values over the normalised free set.
    """
    theory = (target.theory() if theory is None else theory).power(n)
    phi = tensor_power(target.channel, n).data if n > 1 else target.channel.choi.data
    vals = []
    for sense in ("max", "min"):
        prob = ConicProblem()
        x = prob.hermitian("X", phi.shape[0], psd=False)
        free_cone(theory).apply(prob, x, trace=1)
        obj = x.inner(phi).real
        prob.maximize(obj) if sense == "max" else prob.minimize(obj)
        sol = conic.solve(prob)
        vals.append(sol.objective)
    hi, lo = vals
    return TraceCheck(hi - lo <= 1e-7, float(hi), float(lo), n)


@dataclass
class AsymptoticEstimate:
    measure: str
    sequence: list
    anchor: float | None
    normalized: list | None = None  # sequence in target copies, comparable with the anchor
    label: str = "finite-n estimate, not the limit"


def asymptotic_estimate(n_chan, theory: TheorySpec, n_max: int = 2, name: str = "max") -> AsymptoticEstimate:
    """Per-copy zero-error measure of ``N^{(x) n}`` for ``n <= n_max``.

    For purity the channel-entropy anchor ``S(N)/2`` (target copies of the
    qubit identity per use) is attached, with the sequence divided by the
    identity's constant 2 so both are in the same units.  The anchor is the
    known value of the asymptotic rates, not something the sequence proves.
    """
    seq = []
    for n in range(1, n_max + 1):
        choi = tensor_power(n_chan, n)
        seq.append(measure(name, choi, theory.power(n), 0.0).value / n)
    anchor = normalized = None
    if theory.id == "purity":
        anchor = channel_entropy(n_chan).value / 2
        normalized = [v / 2 for v in seq]
    return AsymptoticEstimate(name, seq, anchor, normalized)

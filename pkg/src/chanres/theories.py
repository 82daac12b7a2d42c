"""Free-channel sets of the six resource theories, as conic constraints on Choi matrices.

Every set is described through its cone: an (unnormalised) Choi candidate
``X`` is in the cone iff ``X / Tr X`` is the Choi state of a free channel.
All cones contain the trace-preservation tie ``Tr_B X = (Tr X / d_A) I_A``.

================  =====================================================
token             cone condition (beyond ``X >= 0`` and the TP tie)
================  =====================================================
``purity``        ``X = Tr X * pi_A (x) pi_B``
``cc``            ``X = pi_A (x) Tr_A X``  (replacement channels)
``qc``            ``X^{T_B} >= 0``  (PPT Choi; exact when d_A d_B <= 6)
``nu``            ``Tr_A X = (Tr X / d_B) I_B``  (unital channels)
``coh``           every block ``<i|_A X |i>_A`` is diagonal  (MIO)
``ent``           ``X^{T_Bob} >= 0`` over Bob's input and output factors
================  =====================================================

The ``qc`` and ``ent`` cones are supersets of the true free sets whenever
separability is not decided by the PPT test, so measures computed against
them are lower bounds; every report carries the ``relaxed`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from . import conic
from .conic import Affine, ConicProblem
from .core import Channel, ChoiMatrix, as_choi, ket, max_entangled
from .errors import DimensionMismatch, MissingTarget, UnsupportedDims, UnsupportedTheory

__all__ = [
    "THEORY_IDS",
    "TheorySpec",
    "FreeConeConstraints",
    "MembershipReport",
    "make_theory",
    "free_cone",
    "is_free",
    "Target",
    "TARGETS",
    "get_target",
    "targets_for",
]

THEORY_IDS = ("purity", "cc", "qc", "nu", "coh", "ent")

THEORY_NAMES = {
    "purity": "Purity",
    "cc": "ClassicalCapacity",
    "qc": "QuantumCapacity",
    "nu": "NonUniformity",
    "coh": "Coherence",
    "ent": "Entanglement",
}

# free robustness finite only where the free set spans the channel space
ROBUSTNESS_FINITE = {"purity": False, "cc": False, "qc": True, "nu": False, "coh": False, "ent": True}


def _prod(dims) -> int:
    out = 1
    for d in dims:
        out *= int(d)
    return out


@dataclass(frozen=True)
class TheorySpec:
    """A resource theory at fixed channel dimensions.

    ``in_dims``/``out_dims`` list the tensor factors of the input and output;
    ``in_parties``/``out_parties`` give the owner (0 = Alice, 1 = Bob) of
    each factor and are only used by the entanglement theory.
    """

    id: str
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    in_parties: tuple[int, ...] = ()
    out_parties: tuple[int, ...] = ()
    relaxation: str = "ppt"

    def __post_init__(self):
        if self.id not in THEORY_IDS:
            raise UnsupportedTheory(f"unknown theory {self.id!r}; choose from {THEORY_IDS}")
        if self.id == "ent":
            if len(self.in_parties) != len(self.in_dims) or len(self.out_parties) != len(self.out_dims):
                raise UnsupportedDims("entanglement theory requires an explicit bipartition of input and output")

    @property
    def name(self) -> str:
        return THEORY_NAMES[self.id]

    @property
    def dim_in(self) -> int:
        return _prod(self.in_dims)

    @property
    def dim_out(self) -> int:
        return _prod(self.out_dims)

    @property
    def dims(self) -> tuple[int, int]:
        return self.dim_in, self.dim_out

    @property
    def robustness_finite(self) -> bool:
        return ROBUSTNESS_FINITE[self.id]

    @property
    def relaxed(self) -> bool:
        """True when the cone is a strict SDP superset of the free set."""
        if self.id == "qc":
            return self.dim_in * self.dim_out > 6
        return self.id == "ent"

    def power(self, n: int) -> "TheorySpec":
        """The same theory on ``n`` parallel copies (inputs before outputs)."""
        if n == 1:
            return self
        return replace(self, in_dims=self.in_dims * n, out_dims=self.out_dims * n,
                       in_parties=self.in_parties * n, out_parties=self.out_parties * n)

    def check(self, choi) -> ChoiMatrix:
        c = as_choi(choi)
        if c.dims != self.dims:
            raise DimensionMismatch(f"channel dims {c.dims} do not match theory dims {self.dims}")
        return c

    def token(self) -> str:
        return self.id


def make_theory(token: str, dim_in: int | tuple = 2, dim_out: int | tuple = 2,
                in_parties: tuple = (), out_parties: tuple = ()) -> TheorySpec:
    """Build a :class:`TheorySpec` from a CLI token and dimensions.

    For ``ent`` the dims must be tuples of factor dimensions; parties default
    to (Alice, Bob) for two-factor systems.
    """
    in_dims = tuple(dim_in) if isinstance(dim_in, (tuple, list)) else (int(dim_in),)
    out_dims = tuple(dim_out) if isinstance(dim_out, (tuple, list)) else (int(dim_out),)
    if token == "ent":
        if not in_parties:
            in_parties = (0, 1) if len(in_dims) == 2 else ()
        if not out_parties:
            out_parties = (0, 1) if len(out_dims) == 2 else ()
    return TheorySpec(token, in_dims, out_dims, tuple(in_parties), tuple(out_parties))


@dataclass(frozen=True)
class FreeConeConstraints:
    """Constraint fragment expressing ``X in cone(free set)``."""

    theory: TheorySpec
    description: str
    relaxed: bool
    _apply: Callable[[ConicProblem, Affine], None] = field(repr=False)

    def apply(self, problem: ConicProblem, x: Affine, trace=None) -> None:
        """Add the cone constraints on ``x``; ``trace`` optionally fixes ``Tr x``."""
        self._apply(problem, x)
        if trace is not None:
            problem.add_eq(x.trace(), trace)


def free_cone(theory: TheorySpec) -> FreeConeConstraints:
    d_a, d_b = theory.dims
    dims = [d_a, d_b]
    eye_a = np.eye(d_a)

    def base(problem: ConicProblem, x: Affine) -> None:
        problem.add_psd(x)
        problem.add_eq(x.partial_trace(dims, 1) - x.trace().kron(eye_a / d_a))

    tid = theory.id
    if tid == "purity":
        point = np.eye(d_a * d_b) / (d_a * d_b)

        def apply(problem, x):
            problem.add_eq(x - x.trace().kron(point))
        desc = "X proportional to pi_A (x) pi_B"
    elif tid == "cc":
        def apply(problem, x):
            problem.add_psd(x)
            problem.add_eq(x - x.partial_trace(dims, 0).kron(eye_a / d_a, left=True))
        desc = "X = pi_A (x) Tr_A X"
    elif tid == "qc":
        def apply(problem, x):
            base(problem, x)
            problem.add_psd(x.partial_transpose(dims, 1))
        desc = "X PPT across input:output"
    elif tid == "nu":
        eye_b = np.eye(d_b)

        def apply(problem, x):
            base(problem, x)
            problem.add_eq(x.partial_trace(dims, 0) - x.trace().kron(eye_b / d_b))
        desc = "Tr_A X proportional to I_B"
    elif tid == "coh":
        off = [(i * d_b + b, i * d_b + c) for i in range(d_a) for b in range(d_b) for c in range(d_b) if b < c]

        def apply(problem, x):
            base(problem, x)
            if off:
                problem.add_eq(x.entries(off))
        desc = "diagonal blocks <i|X|i> diagonal"
    elif tid == "ent":
        sys_dims = list(theory.in_dims) + list(theory.out_dims)
        parties = list(theory.in_parties) + list(theory.out_parties)
        bob = [k for k, p in enumerate(parties) if p == 1 and sys_dims[k] > 1]

        def apply(problem, x):
            base(problem, x)
            if bob:
                problem.add_psd(x.partial_transpose(sys_dims, bob))
        desc = "X PPT across Alice (in+out) : Bob (in+out)"
    else:  # pragma: no cover - guarded by TheorySpec
        raise UnsupportedTheory(tid)
    return FreeConeConstraints(theory, desc, theory.relaxed, apply)


@dataclass(frozen=True)
class MembershipReport:
    free: bool
    residual: float  # trace distance from the Choi state to the (relaxed) free set
    relaxed: bool
    status: str
    nearest: np.ndarray | None = field(default=None, repr=False)

    def __bool__(self):
        return self.free


def distance_to_free(choi, theory: TheorySpec):
    """Trace distance ``min_Y 1/2 ||J - Y||_1`` over normalised free Choi states."""
    c = theory.check(choi)
    n = c.data.shape[0]
    prob = ConicProblem()
    y = prob.hermitian("Y", n, psd=False)
    free_cone(theory).apply(prob, y, trace=1)
    p = prob.hermitian("P", n)
    q = prob.hermitian("Q", n)
    prob.add_eq(p - q - (c.data - y))
    prob.minimize(0.5 * (p.trace() + q.trace()).real)
    sol = conic.solve(prob)
    return sol, sol.primal.get("Y")


def is_free(choi, theory: TheorySpec, tol: float = 1e-6) -> MembershipReport:
    """Membership of a channel in the (possibly relaxed) free set.

    "free" with ``relaxed=True`` means free with respect to the SDP
    superset; monotones measured against it are lower bounds.
    """
    sol, nearest = distance_to_free(choi, theory)
    residual = max(sol.objective, 0.0)
    return MembershipReport(residual <= tol, float(residual), theory.relaxed, sol.status, nearest)


# ---------------------------------------------------------------------------
# target channels
# ---------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]


@dataclass(frozen=True)
class Target:
    """A registered target channel with the closed-form regularised constants.

    ``analytic_m`` maps measure tokens (``lr``, ``max``, ``h``, ``htilde``,
    ``hhat``) to the per-copy constant, valid for every number of copies.
    """

    key: str
    theory_id: str
    kind: str  # "unitary" | "preparation"
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    analytic_m: dict = field(default_factory=dict)
    label: str = ""

    @cached_property
    def channel(self) -> Channel:
        from .fileio import load_channel
        from importlib.resources import files

        ch, _ = load_channel(files("chanres.data") / f"{self.key}.json")
        return ch

    def theory(self) -> TheorySpec:
        return make_theory(self.theory_id, self.in_dims if len(self.in_dims) > 1 else self.in_dims[0],
                           self.out_dims if len(self.out_dims) > 1 else self.out_dims[0])

    def constant(self, measure: str):
        return self.analytic_m.get(measure)


TARGETS: dict[tuple[str, str], Target] = {}


def _register(t: Target) -> None:
    TARGETS[(t.theory_id, t.key)] = t


_register(Target("id2", "purity", "unitary", (2,), (2,), {"max": 2, "h": 2, "htilde": 2}, "I_2"))
_register(Target("id2", "cc", "unitary", (2,), (2,), {"max": 2, "h": 2, "htilde": 2}, "I_2"))
_register(Target("id2", "qc", "unitary", (2,), (2,), {"lr": 1, "h": 1, "htilde": 1}, "I_2"))
_register(Target("g2", "nu", "preparation", (1,), (2,), {"max": 1, "htilde": 1}, "G_2"))
_register(Target("hadamard", "coh", "unitary", (2,), (2,), {"max": 1, "h": 1, "htilde": 1}, "U_Had"))
_register(Target("gplus", "coh", "preparation", (1,), (2,), {"max": 1, "h": 1, "htilde": 1, "hhat": 1}, "G_+"))
_register(Target("cnot", "ent", "unitary", (2, 2), (2, 2), {"lr": 2, "h": 2, "htilde": 2}, "U_CN"))
_register(Target("gphi", "ent", "preparation", (1, 1), (2, 2), {"lr": 1, "h": 1, "htilde": 1, "hhat": 1},
                 "G_Phi+"))


def get_target(theory_id: str, key: str | None = None) -> Target:
    """Registered target for a theory; the first one when ``key`` is omitted."""
    if key is None:
        for (tid, _), t in TARGETS.items():
            if tid == theory_id:
                return t
        raise MissingTarget(theory_id)
    try:
        return TARGETS[(theory_id, key)]
    except KeyError:
        raise MissingTarget(f"no target {key!r} registered for theory {theory_id!r}") from None


def targets_for(theory_id: str) -> list[Target]:
    return [t for (tid, _), t in TARGETS.items() if tid == theory_id]


def target_matrices() -> dict[str, Channel]:
    """Channels shipped as data files, built from their defining matrices."""
    plus = (ket(0, 2) + ket(1, 2)) / np.sqrt(2)
    phi = max_entangled(2)
    return {
        "id2": Channel.from_unitary(np.eye(2), name="I_2"),
        "hadamard": Channel.from_unitary(_H, name="U_Had"),
        "cnot": Channel.from_unitary(_CNOT, name="U_CN"),
        "g2": Channel.from_kraus([ket(0, 2)[:, None]], name="G_2"),
        "gplus": Channel.from_kraus([plus[:, None]], name="G_+"),
        "gphi": Channel.from_kraus([np.linalg.eigh(phi)[1][:, -1:]], name="G_Phi+"),
    }

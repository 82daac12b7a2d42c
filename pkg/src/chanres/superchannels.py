"""Superchannels in pre/post form and free-superchannel samplers.

A superchannel maps ``N: A -> B`` to ``U o (N (x) id_E) o V`` with
``V: C -> A (x) E`` and ``U: B (x) E -> D``.  Composition is done with
row-major superoperators.

The samplers build superchannels that are free by construction, using a
sound but incomplete family per theory:

==========  =========================================================
purity      V an instrument with classical E; U applies a unital
            branch map selected by E
cc          V prepares a fixed classical E independent of the input;
            U arbitrary
qc          V an instrument with classical E; U any channel selected by E
nu          V, U unital (``W (rho (x) pi_E) W^dag`` and ``Tr_E W . W^dag``)
coh         V, U mixtures of permutation-phase and dephase-then-stochastic
            maps; U also traces out an incoherent E
ent         V = V1 (x) V2, U = U1 (x) U2 local to the two parties
==========  =========================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Channel, ChoiMatrix, as_choi, choi_to_superop, kraus_to_choi, permute_choi, superop_to_choi, \
    tensor_channels
from .errors import DimensionMismatch, UnsupportedTheory
from .fileio import channel_from_dict, channel_to_dict
from .theories import TheorySpec, is_free

__all__ = [
    "Superchannel",
    "apply_superchannel",
    "random_channel",
    "random_unitary",
    "random_free_channel",
    "random_free_superchannel",
    "ProbeReport",
    "monotonicity_probe",
]


@dataclass(frozen=True)
class Superchannel:
    pre: ChoiMatrix  # C -> A (x) E
    post: ChoiMatrix  # B (x) E -> D
    dim_a: int
    dim_b: int
    dim_e: int
    family: str = ""

    def __post_init__(self):
        c_dims = self.pre.dim_out, self.post.dim_in
        if c_dims != (self.dim_a * self.dim_e, self.dim_b * self.dim_e):
            raise DimensionMismatch(
                f"pre/post dims {c_dims} do not match A={self.dim_a}, B={self.dim_b}, E={self.dim_e}")

    @property
    def dim_c(self) -> int:
        return self.pre.dim_in

    @property
    def dim_d(self) -> int:
        return self.post.dim_out

    def __call__(self, chan) -> ChoiMatrix:
        return apply_superchannel(self, chan)

    def to_dict(self) -> dict:
        return {"family": self.family, "dim_a": self.dim_a, "dim_b": self.dim_b, "dim_e": self.dim_e,
                "pre": channel_to_dict(Channel(self.pre), "choi"),
                "post": channel_to_dict(Channel(self.post), "choi")}

    @classmethod
    def from_dict(cls, doc: dict) -> "Superchannel":
        return cls(channel_from_dict(doc["pre"]).choi, channel_from_dict(doc["post"]).choi,
                   int(doc["dim_a"]), int(doc["dim_b"]), int(doc["dim_e"]), doc.get("family", ""))


def _with_ancilla(s_n: np.ndarray, d_a: int, d_b: int, d_e: int) -> np.ndarray:
    """Superoperator of ``N (x) id_E`` from that of ``N``."""
    sn = s_n.reshape(d_b, d_b, d_a, d_a)
    eye = np.eye(d_e)
    big = np.einsum("pquv,ef,gh->peqgufvh", sn, eye, eye)
    return big.reshape((d_b * d_e) ** 2, (d_a * d_e) ** 2)


def apply_superchannel(sc: Superchannel, chan, check: bool = True) -> ChoiMatrix:
    """Choi matrix of ``U o (N (x) id_E) o V``."""
    c = as_choi(chan)
    if c.dims != (sc.dim_a, sc.dim_b):
        raise DimensionMismatch(f"channel dims {c.dims} do not fit superchannel slot {(sc.dim_a, sc.dim_b)}")
    s = choi_to_superop(sc.post) @ _with_ancilla(choi_to_superop(c), sc.dim_a, sc.dim_b, sc.dim_e) \
        @ choi_to_superop(sc.pre)
    return superop_to_choi(s, sc.dim_c, sc.dim_d, check=check)


# ---------------------------------------------------------------------------
# random channels
# ---------------------------------------------------------------------------

def _isometry(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    g = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-random unitary."""
    return _isometry(rng, d, d)


def _random_kraus(rng: np.random.Generator, d_in: int, d_out: int, rank: int | None = None) -> list:
    rank = d_in * d_out if rank is None else max(rank, -(-d_in // d_out))
    w = _isometry(rng, d_in, d_out * rank)
    return [w[k * d_out:(k + 1) * d_out] for k in range(rank)]


def random_channel(rng: np.random.Generator, d_in: int, d_out: int, rank: int | None = None) -> Channel:
    """Random channel from a Haar isometry into output (x) environment."""
    return Channel.from_kraus(_random_kraus(rng, d_in, d_out, rank))


def _mix(rng: np.random.Generator, kraus_sets: list) -> ChoiMatrix:
    p = rng.dirichlet(np.ones(len(kraus_sets)))
    ops = [math.sqrt(pk) * k for pk, ks in zip(p, kraus_sets) for k in ks]
    return kraus_to_choi(ops)


def _perm_phase(rng: np.random.Generator, d_in: int, d_out: int) -> list:
    """Single Kraus operator ``|i> -> e^{i t} |pi(i)>`` with ``pi`` injective."""
    pi = rng.permutation(d_out)[:d_in]
    k = np.zeros((d_out, d_in), dtype=complex)
    k[pi, np.arange(d_in)] = np.exp(2j * np.pi * rng.random(d_in))
    return [k]


def _dephase_stochastic(rng: np.random.Generator, d_in: int, d_out: int) -> list:
    t = rng.dirichlet(np.ones(d_out), size=d_in).T  # columns sum to one
    ops = []
    for i in range(d_in):
        for k in range(d_out):
            m = np.zeros((d_out, d_in), dtype=complex)
            m[k, i] = math.sqrt(t[k, i])
            ops.append(m)
    return ops


def _trace_out_last(ops: list, d_keep: int, d_e: int) -> list:
    """Follow each Kraus operator by the partial trace over a trailing factor of dim ``d_e``."""
    out = []
    for k in ops:
        for f in range(d_e):
            bra = np.kron(np.eye(d_keep), np.eye(d_e)[f][None, :])
            out.append(bra @ k)
    return out


def random_free_channel(theory: TheorySpec, rng: np.random.Generator) -> ChoiMatrix:
    """A random element of the free set (of its SDP superset for ``ent``)."""
    d_a, d_b = theory.dims
    tid = theory.id
    if tid == "purity":
        return ChoiMatrix(np.eye(d_a * d_b) / (d_a * d_b), d_a, d_b)
    if tid == "cc":
        sigma = random_channel(rng, 1, d_b).choi.data
        return ChoiMatrix(np.kron(np.eye(d_a) / d_a, sigma), d_a, d_b)
    if tid == "qc":
        # measure with a random POVM, prepare random states
        n_out = d_a + 1
        povm = _random_kraus(rng, d_a, 1, n_out)
        ops = []
        for m in povm:
            rho = random_channel(rng, 1, d_b).choi.data
            w, v = np.linalg.eigh(rho)
            for wk, vk in zip(w, v.T):
                if wk > 1e-14:
                    ops.append(math.sqrt(wk) * vk[:, None] @ m)
        return kraus_to_choi(ops)
    if tid == "nu":
        if d_a == d_b:
            sets = [[random_unitary(rng, d_a)] for _ in range(3)]
            return _mix(rng, sets)
        return ChoiMatrix(np.eye(d_a * d_b) / (d_a * d_b), d_a, d_b)
    if tid == "coh":
        sets = [_dephase_stochastic(rng, d_a, d_b)]
        if d_a <= d_b:
            sets.append(_perm_phase(rng, d_a, d_b))
        return _mix(rng, sets)
    if tid == "ent":
        # local product channels; tensor_channels orders all inputs before all outputs
        return tensor_channels(*[random_channel(rng, a, b).choi for a, b in zip(theory.in_dims, theory.out_dims)])
    raise UnsupportedTheory(tid)


# ---------------------------------------------------------------------------
# free superchannels
# ---------------------------------------------------------------------------

def _classical_instrument(rng: np.random.Generator, d_c: int, d_a: int, d_e: int, fixed: bool) -> list:
    """Kraus operators ``K_{e,k} (x) |e>`` of ``rho -> sum_e V_e(rho) (x) |e><e|``.

    With ``fixed`` the branch probabilities do not depend on the input.
    """
    ops = []
    if fixed:
        p = rng.dirichlet(np.ones(d_e))
        for e in range(d_e):
            for k in _random_kraus(rng, d_c, d_a, 2):
                ops.append(math.sqrt(p[e]) * np.kron(k, np.eye(d_e)[:, [e]]))
    else:
        w = _random_kraus(rng, d_c, d_a * d_e, 2)
        for k in w:
            for e in range(d_e):
                proj = np.kron(np.eye(d_a), np.outer(np.eye(d_e)[e], np.eye(d_e)[e]))
                ops.append(proj @ k)
    return ops


def _branch_post(rng: np.random.Generator, d_b: int, d_d: int, d_e: int, unital: bool) -> list:
    """Kraus operators ``L_{e,k} (x) <e|`` of ``sum_e U_e (x) <e| . |e>``."""
    ops = []
    for e in range(d_e):
        bra = np.eye(d_e)[[e], :]
        if unital:
            p = rng.dirichlet(np.ones(2))
            branch = [math.sqrt(pk) * random_unitary(rng, d_b) for pk in p]
        else:
            branch = _random_kraus(rng, d_b, d_d, 2)
        ops += [np.kron(k, bra) for k in branch]
    return ops


def random_free_superchannel(theory: TheorySpec, seed: int | np.random.Generator = 0,
                             dim_e: int | None = None) -> Superchannel:
    """Superchannel mapping the theory's free set into itself, with C = A and D = B."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d_a, d_b = theory.dims
    tid = theory.id
    if dim_e is None:
        dim_e = 2 if tid == "ent" else min(d_a * d_b, 4)
    e = dim_e
    if tid == "purity":
        pre = kraus_to_choi(_classical_instrument(rng, d_a, d_a, e, fixed=False))
        post = kraus_to_choi(_branch_post(rng, d_b, d_b, e, unital=True))
    elif tid == "cc":
        pre = kraus_to_choi(_classical_instrument(rng, d_a, d_a, e, fixed=True))
        post = random_channel(rng, d_b * e, d_b, 3).choi
    elif tid == "qc":
        pre = kraus_to_choi(_classical_instrument(rng, d_a, d_a, e, fixed=False))
        post = kraus_to_choi(_branch_post(rng, d_b, d_b, e, unital=False))
    elif tid == "nu":
        pre_sets, post_sets = [], []
        for _ in range(2):
            w = random_unitary(rng, d_a * e)
            pre_sets.append([w @ np.kron(np.eye(d_a), np.eye(e)[:, [f]]) / math.sqrt(e) for f in range(e)])
            w = random_unitary(rng, d_b * e)
            post_sets.append(_trace_out_last([w], d_b, e))
        pre, post = _mix(rng, pre_sets), _mix(rng, post_sets)
    elif tid == "coh":
        pre = _mix(rng, [_perm_phase(rng, d_a, d_a * e), _dephase_stochastic(rng, d_a, d_a * e)])
        post = _mix(rng, [_trace_out_last(_perm_phase(rng, d_b * e, d_b * e), d_b, e),
                          _dephase_stochastic(rng, d_b * e, d_b)])
    elif tid == "ent":
        if len(theory.in_dims) != 2 or len(theory.out_dims) != 2:
            raise UnsupportedTheory("entanglement sampler needs two-party input and output")
        (a1, a2), (b1, b2) = theory.in_dims, theory.out_dims
        v1, v2 = random_channel(rng, a1, a1 * e, 2).choi, random_channel(rng, a2, a2 * e, 2).choi
        u1, u2 = random_channel(rng, b1 * e, b1, 2).choi, random_channel(rng, b2 * e, b2, 2).choi
        pre = permute_choi(tensor_channels(v1, v2), [a1, a2], [a1, e, a2, e], None, [0, 2, 1, 3])
        post = permute_choi(tensor_channels(u1, u2), [b1, e, b2, e], [b1, b2], [0, 2, 1, 3], None)
        e = e * e
    else:
        raise UnsupportedTheory(tid)
    return Superchannel(pre, post, d_a, d_b, e, tid)


# ---------------------------------------------------------------------------
# monotonicity probes
# ---------------------------------------------------------------------------

PROBE_MEASURES = ("lr", "max")


@dataclass
class ProbeReport:
    theory: str
    measure: str
    base: float
    values: list = field(default_factory=list)
    violations: list = field(default_factory=list)  # (trial, value, superchannel dict)
    family: str = ""

    @property
    def passed(self) -> bool:
        return not self.violations


def monotonicity_probe(theory: TheorySpec, measure_name: str, chan, trials: int = 100, seed: int = 0,
                       tol: float = 1e-6) -> ProbeReport:
    """Check ``measure(S(N)) <= measure(N) + tol`` over sampled free superchannels."""
    from .monotones import measure

    if measure_name not in PROBE_MEASURES:
        raise ValueError(f"monotonicity probes support {PROBE_MEASURES}, got {measure_name!r}")
    if trials < 1:
        raise ValueError("trials must be positive")
    base = measure(measure_name, chan, theory).value
    rep = ProbeReport(theory.id, measure_name, base, family=theory.id)
    for t in range(trials):
        sc = random_free_superchannel(theory, np.random.default_rng([seed, t]))
        img = apply_superchannel(sc, chan)
        val = measure(measure_name, img, theory).value
        rep.values.append(val)
        if val > base + tol:
            rep.violations.append((t, val, sc.to_dict()))
    return rep


def free_image_check(theory: TheorySpec, sc: Superchannel, chois, tol: float = 1e-6) -> bool:
    """Whether ``sc`` maps every given free channel to a free channel."""
    return all(is_free(apply_superchannel(sc, c), theory, tol).free for c in chois)

"""Dense channel calculus: states, Kraus/Choi conversion, tensor products,
partial traces and transposes, fidelity.

Conventions
-----------
A channel ``N: A -> B`` is represented by its trace-one Choi state
``J = (I (x) N)(Phi+)`` with ``Phi+ = (1/sqrt(d_A)) sum_i |ii>``.  The input
factor comes first and the basis is row-major ``|i>_A |j>_B``, so
``Tr_B J = I_A / d_A`` for every trace-preserving map and

    N(rho) = d_A Tr_A[(rho^T (x) I_B) J].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .config import settings
from .errors import (
    CompletenessViolation,
    DimensionGuardExceeded,
    DimensionMismatch,
    InvalidState,
    NumericalFailure,
    ShapeMismatch,
)

__all__ = [
    "DensityMatrix",
    "ChoiMatrix",
    "Channel",
    "kraus_to_choi",
    "choi_to_kraus",
    "apply_channel",
    "tensor_channels",
    "tensor_power",
    "permute_choi",
    "partial_trace",
    "partial_transpose",
    "permute_systems",
    "fidelity",
    "trace_distance",
    "max_entangled",
    "maximally_mixed",
    "ket",
    "choi_to_superop",
    "superop_to_choi",
]


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def _prod(dims: Iterable[int]) -> int:
    return int(reduce(lambda a, b: a * b, dims, 1))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def max_entangled(dim: int) -> np.ndarray:
    """Projector onto (1/sqrt(d)) sum_i |ii>."""
    v = np.eye(dim, dtype=complex).reshape(-1) / np.sqrt(dim)
    return np.outer(v, v.conj())


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _check_square(op: np.ndarray, dims: Sequence[int]) -> None:
    n = _prod(dims)
    if op.ndim != 2 or op.shape != (n, n):
        raise DimensionMismatch(f"operator of shape {op.shape} does not act on dims {tuple(dims)}")


# ---------------------------------------------------------------------------
# subsystem manipulation
# ---------------------------------------------------------------------------

def permute_systems(op: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square operator.

    Factor ``k`` of the result is factor ``perm[k]`` of ``op``.
    """
    dims = list(dims)
    _check_square(op, dims)
    n = len(dims)
    t = op.reshape(dims + dims)
    axes = list(perm) + [p + n for p in perm]
    new = _prod(dims)
    return t.transpose(axes).reshape(new, new)


def partial_trace(op: np.ndarray, dims: Sequence[int], traced: int | Sequence[int]) -> np.ndarray:
    """Trace out the subsystems listed in ``traced``."""
    dims = list(dims)
    _check_square(op, dims)
    traced = [traced] if isinstance(traced, (int, np.integer)) else sorted(traced)
    t = op.reshape(dims + dims)
    n = len(dims)
    for k in reversed(traced):
        t = np.trace(t, axis1=k, axis2=k + n)
        n -= 1
    keep = _prod(d for i, d in enumerate(dims) if i not in traced)
    return t.reshape(keep, keep)


def partial_transpose(op: np.ndarray, dims: Sequence[int], which: int | Sequence[int]) -> np.ndarray:
    """Transpose the tensor factors listed in ``which``."""
    dims = list(dims)
    _check_square(op, dims)
    which = [which] if isinstance(which, (int, np.integer)) else list(which)
    n = len(dims)
    axes = list(range(2 * n))
    for k in which:
        if not 0 <= k < n:
            raise DimensionMismatch(f"subsystem {k} out of range for {n} factors")
        axes[k], axes[k + n] = axes[k + n], axes[k]
    return op.reshape(dims + dims).transpose(axes).reshape(op.shape)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityMatrix:
    """A validated density operator."""

    data: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.data, dtype=complex)
        if m.ndim == 1:
            m = np.outer(m, m.conj())
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatch(f"density matrix must be square, got {m.shape}")
        if self.check:
            _validate_state(m, "density matrix")
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def _validate_state(m: np.ndarray, what: str) -> None:
    if np.abs(m - m.conj().T).max(initial=0.0) > max(settings.herm_tol, 1e-12 * np.abs(m).max(initial=1.0)):
        raise InvalidState(f"{what} is not Hermitian")
    tr = np.trace(m).real
    if abs(tr - 1) > settings.trace_tol:
        raise InvalidState(f"{what} has trace {tr}")
    lo = np.linalg.eigvalsh(_hermitize(m)).min()
    if lo < -settings.psd_tol:
        raise InvalidState(f"{what} has negative eigenvalue {lo:.3e}")


def _as_array(x) -> np.ndarray:
    if isinstance(x, (DensityMatrix, ChoiMatrix)):
        return x.data
    if isinstance(x, Channel):
        return x.choi.data
    return np.asarray(x, dtype=complex)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChoiMatrix:
    """Trace-one Choi state of a CPTP map, input factor first."""

    data: np.ndarray
    dim_in: int
    dim_out: int
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.data, dtype=complex)
        n = self.dim_in * self.dim_out
        if m.shape != (n, n):
            raise ShapeMismatch(f"Choi matrix shape {m.shape} inconsistent with dims {self.dim_in}x{self.dim_out}")
        if self.check:
            _validate_state(m, "Choi matrix")
            marg = partial_trace(m, [self.dim_in, self.dim_out], 1)
            if np.abs(marg - np.eye(self.dim_in) / self.dim_in).max() > settings.trace_tol:
                raise InvalidState("Choi matrix is not trace preserving")
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def dims(self) -> tuple[int, int]:
        return self.dim_in, self.dim_out

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)


def kraus_to_choi(kraus: Sequence[np.ndarray], dim_in: int | None = None,
                  dim_out: int | None = None) -> ChoiMatrix:
    """Choi state ``(I (x) N)(Phi+)`` of the map with the given Kraus operators.

    :raises ShapeMismatch: if the operators disagree in shape or with the dims.
    :raises CompletenessViolation: if ``sum K^dag K`` deviates from ``I`` by
        more than ``settings.kraus_tol``.
    """
    ops = [np.atleast_2d(np.asarray(k, dtype=complex)) for k in kraus]
    if not ops:
        raise ShapeMismatch("empty Kraus list")
    shape = ops[0].shape
    if any(k.shape != shape for k in ops):
        raise ShapeMismatch("Kraus operators have inconsistent shapes")
    d_out, d_in = shape
    if (dim_in is not None and dim_in != d_in) or (dim_out is not None and dim_out != d_out):
        raise ShapeMismatch(f"Kraus shape {shape} does not match dims ({dim_in}, {dim_out})")
    comp = sum(k.conj().T @ k for k in ops)
    if np.abs(comp - np.eye(d_in)).max() > settings.kraus_tol:
        raise CompletenessViolation("Kraus operators are not trace preserving")
    vecs = np.array([k.T.reshape(-1) for k in ops]) / np.sqrt(d_in)
    choi = vecs.T @ vecs.conj()
    return ChoiMatrix(_hermitize(choi), d_in, d_out)


def choi_to_kraus(choi: ChoiMatrix, tol: float = 1e-12) -> list[np.ndarray]:
    d_in, d_out = choi.dims
    w, v = np.linalg.eigh(_hermitize(choi.data))
    ops = []
    for val, vec in zip(w[::-1], v.T[::-1]):
        if val <= tol:
            break
        ops.append(np.sqrt(val * d_in) * vec.reshape(d_in, d_out).T)
    return ops


class Channel:
    """A CPTP map held as a Choi matrix, optionally with a Kraus representation."""

    def __init__(self, choi: ChoiMatrix, kraus: Sequence[np.ndarray] | None = None, name: str = ""):
        self.choi = choi
        self.kraus = None if kraus is None else tuple(np.asarray(k, dtype=complex) for k in kraus)
        self.name = name
        if self.kraus is not None:
            other = kraus_to_choi(self.kraus, choi.dim_in, choi.dim_out)
            if np.abs(other.data - choi.data).max() > 1e-8:
                raise DimensionMismatch("Kraus and Choi representations disagree")

    @classmethod
    def from_kraus(cls, kraus, name: str = "") -> "Channel":
        choi = kraus_to_choi(kraus)
        return cls(choi, kraus, name=name)

    @classmethod
    def from_choi(cls, data, dim_in: int, dim_out: int, name: str = "") -> "Channel":
        return cls(ChoiMatrix(data, dim_in, dim_out), name=name)

    @classmethod
    def from_unitary(cls, u, name: str = "") -> "Channel":
        return cls.from_kraus([np.asarray(u, dtype=complex)], name=name)

    @classmethod
    def preparation(cls, state, dim_in: int = 1, name: str = "") -> "Channel":
        """Replacement channel that outputs ``state`` for every input."""
        rho = DensityMatrix(state).data
        return cls.from_choi(np.kron(maximally_mixed(dim_in), rho), dim_in, rho.shape[0], name=name)

    @property
    def dim_in(self) -> int:
        return self.choi.dim_in

    @property
    def dim_out(self) -> int:
        return self.choi.dim_out

    @property
    def matrix(self) -> np.ndarray:
        return self.choi.data

    def is_unitary(self, tol: float = 1e-9) -> bool:
        if self.dim_in != self.dim_out:
            return False
        w = np.linalg.eigvalsh(self.choi.data)
        return w[-1] > 1 - tol

    def __call__(self, rho) -> np.ndarray:
        return apply_channel(self, rho)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Channel{label} {self.dim_in}->{self.dim_out}>"


def as_choi(x) -> ChoiMatrix:
    if isinstance(x, ChoiMatrix):
        return x
    if isinstance(x, Channel):
        return x.choi
    raise TypeError(f"expected Channel or ChoiMatrix, got {type(x).__name__}")


def apply_channel(choi, rho, ancilla_dim: int = 1) -> np.ndarray:
    """Return ``(N (x) I_R)(rho)`` for ``rho`` on ``A (x) R``; output ordered ``B (x) R``."""
    c = as_choi(choi)
    d_a, d_b = c.dims
    m = _as_array(rho)
    if m.shape != (d_a * ancilla_dim, d_a * ancilla_dim):
        raise DimensionMismatch(f"input of shape {m.shape} does not match {d_a}x{ancilla_dim}")
    j = c.data.reshape(d_a, d_b, d_a, d_b)
    r = m.reshape(d_a, ancilla_dim, d_a, ancilla_dim)
    out = d_a * np.einsum("irjs,ibjc->brcs", r, j)
    n = d_b * ancilla_dim
    return out.reshape(n, n)


def permute_choi(choi: ChoiMatrix, in_dims: Sequence[int], out_dims: Sequence[int],
                 in_perm: Sequence[int] | None = None, out_perm: Sequence[int] | None = None) -> ChoiMatrix:
    """Relabel the input and output tensor factors of a Choi matrix."""
    in_perm = list(range(len(in_dims))) if in_perm is None else list(in_perm)
    out_perm = list(range(len(out_dims))) if out_perm is None else list(out_perm)
    dims = list(in_dims) + list(out_dims)
    k = len(in_dims)
    perm = in_perm + [k + p for p in out_perm]
    return ChoiMatrix(permute_systems(choi.data, dims, perm), choi.dim_in, choi.dim_out, check=False)


def tensor_channels(*chois) -> ChoiMatrix:
    """Choi matrix of ``N_1 (x) N_2 (x) ...`` with all inputs before all outputs."""
    cs = [as_choi(c) for c in chois]
    data = reduce(np.kron, [c.data for c in cs])
    dims = []
    for c in cs:
        dims += [c.dim_in, c.dim_out]
    n = len(cs)
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    data = permute_systems(data, dims, perm)
    d_in = _prod(c.dim_in for c in cs)
    d_out = _prod(c.dim_out for c in cs)
    return ChoiMatrix(data, d_in, d_out, check=False)


def tensor_power(choi, n: int) -> ChoiMatrix:
    """Choi matrix of ``N^{(x) n}``, reordered as (all inputs)(all outputs).

    :raises DimensionGuardExceeded: if ``(d_A d_B)^n`` exceeds
        ``settings.max_total_dim``.
    """
    c = as_choi(choi)
    if n < 1:
        raise ValueError("n must be positive")
    total = (c.dim_in * c.dim_out) ** n
    if total > settings.max_total_dim:
        raise DimensionGuardExceeded(f"tensor power dimension {total} exceeds {settings.max_total_dim}")
    if n == 1:
        return c
    return tensor_channels(*([c] * n))


# ---------------------------------------------------------------------------
# superoperators (row-major vectorisation)
# ---------------------------------------------------------------------------

def choi_to_superop(choi) -> np.ndarray:
    """Matrix ``S`` with ``vec(N(rho)) = S vec(rho)``, row-major vec."""
    c = as_choi(choi)
    d_a, d_b = c.dims
    j = c.data.reshape(d_a, d_b, d_a, d_b)
    return d_a * j.transpose(1, 3, 0, 2).reshape(d_b * d_b, d_a * d_a)


def superop_to_choi(s: np.ndarray, dim_in: int, dim_out: int, check: bool = True) -> ChoiMatrix:
    j = np.asarray(s).reshape(dim_out, dim_out, dim_in, dim_in).transpose(2, 0, 3, 1)
    data = j.reshape(dim_in * dim_out, dim_in * dim_out) / dim_in
    return ChoiMatrix(_hermitize(data), dim_in, dim_out, check=check)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    try:
        w, v = np.linalg.eigh(_hermitize(m))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK breakdown
        raise NumericalFailure("matrix square root did not converge") from exc
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def fidelity(rho, sigma) -> float:
    """Squared Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    a, b = _as_array(rho), _as_array(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"fidelity of states with shapes {a.shape} and {b.shape}")
    s = _psd_sqrt(a)
    try:
        w = np.linalg.eigvalsh(_hermitize(s @ b @ s))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure("fidelity eigen-decomposition failed") from exc
    f = float(np.sqrt(np.clip(w, 0, None)).sum() ** 2)
    return min(max(f, 0.0), 1.0)


def trace_distance(rho, sigma) -> float:
    a, b = _as_array(rho), _as_array(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch("trace distance of states with different shapes")
    return float(0.5 * np.abs(np.linalg.eigvalsh(_hermitize(a - b))).sum())

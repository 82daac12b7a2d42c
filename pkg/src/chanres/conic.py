"""A small modelling layer for complex semidefinite programs, solved with Clarabel.

Variables are Hermitian matrix blocks or real scalars.  Expressions are
affine maps of the stacked real parameter vector, stored densely as a
tensor ``lin[r, c, k]`` plus a constant ``const[r, c]``.  Hermitian PSD
constraints are passed to the solver through the real-symmetric embedding

    H = A + iB  ->  [[A, -B], [B, A]]

which is PSD exactly when ``H`` is.

Typical use::

    prob = ConicProblem()
    y = prob.hermitian("Y", 4)              # PSD by default
    prob.add_eq(y.trace(), 1)
    prob.minimize(y.inner(c).real)
    sol = solve(prob)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import clarabel
import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .config import settings
from .errors import DimensionMismatch, SolverFailure

__all__ = ["Affine", "ConicProblem", "ConicSolution", "solve", "bmat", "const"]


def _prod(dims) -> int:
    out = 1
    for d in dims:
        out *= int(d)
    return out


class Affine:
    """Affine complex-matrix-valued function of the real decision vector."""

    __array_ufunc__ = None

    def __init__(self, lin: np.ndarray, const: np.ndarray):
        self.lin = lin
        self.const = const

    # -- construction ----------------------------------------------------
    @staticmethod
    def constant(m) -> "Affine":
        m = np.atleast_2d(np.asarray(m, dtype=complex))
        return Affine(np.zeros(m.shape + (0,), dtype=complex), m.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return self.const.shape

    @property
    def nvars(self) -> int:
        return self.lin.shape[2]

    def _pad(self, n: int) -> np.ndarray:
        k = self.lin.shape[2]
        if k == n:
            return self.lin
        pad = np.zeros(self.lin.shape[:2] + (n - k,), dtype=complex)
        return np.concatenate([self.lin, pad], axis=2)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        other = _lift(other, self.shape)
        if other.shape != self.shape:
            raise DimensionMismatch(f"cannot add shapes {self.shape} and {other.shape}")
        n = max(self.nvars, other.nvars)
        return Affine(self._pad(n) + other._pad(n), self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.lin, -self.const)

    def __sub__(self, other):
        return self + (-_lift(other, self.shape))

    def __rsub__(self, other):
        return _lift(other, self.shape) + (-self)

    def __mul__(self, scalar):
        if isinstance(scalar, Affine):
            raise TypeError("product of two affine expressions is not affine")
        s = complex(scalar) if np.iscomplexobj(scalar) else float(scalar)
        return Affine(self.lin * s, self.const * s)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, m):
        m = np.asarray(m, dtype=complex)
        return Affine(np.einsum("rck,cq->rqk", self.lin, m), self.const @ m)

    def __rmatmul__(self, m):
        m = np.asarray(m, dtype=complex)
        return Affine(np.einsum("pr,rck->pck", m, self.lin), m @ self.const)

    # -- structural ops ------------------------------------------------------
    @property
    def T(self) -> "Affine":
        return Affine(self.lin.transpose(1, 0, 2), self.const.T)

    @property
    def H(self) -> "Affine":
        return Affine(self.lin.transpose(1, 0, 2).conj(), self.const.T.conj())

    @property
    def real(self) -> "Affine":
        return Affine(self.lin.real.astype(complex), self.const.real.astype(complex))

    def trace(self) -> "Affine":
        if self.shape[0] != self.shape[1]:
            raise DimensionMismatch("trace of a non-square expression")
        lin = np.einsum("iik->k", self.lin)[None, None, :]
        return Affine(lin, np.atleast_2d(np.trace(self.const)))

    def inner(self, m) -> "Affine":
        """``Tr[m^dag X]`` as a 1x1 expression."""
        m = np.asarray(m, dtype=complex)
        lin = np.einsum("rc,rck->k", m.conj(), self.lin)[None, None, :]
        return Affine(lin, np.atleast_2d(np.sum(m.conj() * self.const)))

    def kron(self, m, left: bool = False) -> "Affine":
        """``X (x) m`` (or ``m (x) X`` when ``left``)."""
        m = np.atleast_2d(np.asarray(m, dtype=complex))
        (r, c), (p, q) = self.shape, m.shape
        k = self.nvars
        if left:
            lin = np.einsum("ij,abk->iajbk", m, self.lin).reshape(p * r, q * c, k)
            return Affine(lin, np.kron(m, self.const))
        lin = np.einsum("abk,ij->aibjk", self.lin, m).reshape(r * p, c * q, k)
        return Affine(lin, np.kron(self.const, m))

    def _systems(self, dims):
        dims = list(dims)
        if self.shape != (_prod(dims), _prod(dims)):
            raise DimensionMismatch(f"expression of shape {self.shape} does not act on {dims}")
        k = self.nvars
        return dims, self.lin.reshape(dims + dims + [k]), self.const.reshape(dims + dims)

    def partial_trace(self, dims: Sequence[int], traced: int | Sequence[int]) -> "Affine":
        dims, lin, c = self._systems(dims)
        traced = [traced] if isinstance(traced, (int, np.integer)) else sorted(traced)
        n = len(dims)
        for s in reversed(traced):
            lin = np.trace(lin, axis1=s, axis2=s + n)
            c = np.trace(c, axis1=s, axis2=s + n)
            n -= 1
        keep = _prod(d for i, d in enumerate(dims) if i not in traced)
        return Affine(lin.reshape(keep, keep, self.nvars), c.reshape(keep, keep))

    def partial_transpose(self, dims: Sequence[int], which: int | Sequence[int]) -> "Affine":
        dims, lin, c = self._systems(dims)
        which = [which] if isinstance(which, (int, np.integer)) else list(which)
        n = len(dims)
        axes = list(range(2 * n))
        for s in which:
            axes[s], axes[s + n] = axes[s + n], axes[s]
        lin = lin.transpose(axes + [2 * n])
        c = c.transpose(axes)
        return Affine(lin.reshape(self.shape + (self.nvars,)), c.reshape(self.shape))

    def permute(self, dims: Sequence[int], perm: Sequence[int]) -> "Affine":
        dims, lin, c = self._systems(dims)
        n = len(dims)
        axes = list(perm) + [p + n for p in perm]
        lin = lin.transpose(axes + [2 * n])
        return Affine(lin.reshape(self.shape + (self.nvars,)), c.transpose(axes).reshape(self.shape))

    def entries(self, index: Sequence[tuple[int, int]]) -> "Affine":
        """Column vector of the selected entries."""
        rows = [i for i, _ in index]
        cols = [j for _, j in index]
        lin = self.lin[rows, cols, :][:, None, :]
        return Affine(lin, self.const[rows, cols][:, None])

    def value(self, x: np.ndarray) -> np.ndarray:
        lin = self._pad(len(x))
        return np.einsum("rck,k->rc", lin, x) + self.const


def _lift(x, shape) -> Affine:
    if isinstance(x, Affine):
        return x
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 0:
        if shape[0] == shape[1]:
            arr = arr * np.eye(shape[0])
        elif arr == 0:
            arr = np.zeros(shape, dtype=complex)
        else:
            raise DimensionMismatch(f"cannot lift a nonzero scalar to shape {shape}")
    return Affine.constant(arr)


def const(m) -> Affine:
    return Affine.constant(m)


def bmat(blocks: Sequence[Sequence[Affine]]) -> Affine:
    """Block matrix of affine expressions (constants are lifted)."""
    n = 0
    lifted = []
    for row in blocks:
        lrow = [b if isinstance(b, Affine) else Affine.constant(b) for b in row]
        n = max([n] + [b.nvars for b in lrow])
        lifted.append(lrow)
    lin = np.concatenate([np.concatenate([b._pad(n) for b in row], axis=1) for row in lifted], axis=0)
    c = np.concatenate([np.concatenate([b.const for b in row], axis=1) for row in lifted], axis=0)
    return Affine(lin, c)


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------

@dataclass
class _Block:
    name: str
    kind: str  # "hermitian" | "nonneg" | "free"
    dim: int
    offset: int
    size: int
    expr: Affine


@dataclass
class _Constraint:
    name: str
    kind: str  # "eq" | "psd" | "nonneg"
    expr: Affine


class ConicProblem:
    """Container for blocks, constraints and a real linear objective."""

    def __init__(self):
        self.nvars = 0
        self.blocks: dict[str, _Block] = {}
        self.constraints: list[_Constraint] = []
        self.objective: Affine | None = None
        self.sense = 1.0

    def _new_name(self, prefix: str) -> str:
        return f"{prefix}{len(self.constraints)}"

    def hermitian(self, name: str, dim: int, psd: bool = True) -> Affine:
        """Declare a ``dim x dim`` Hermitian block."""
        if name in self.blocks:
            raise ValueError(f"block {name!r} already declared")
        off = self.nvars
        size = dim * dim
        lin = np.zeros((dim, dim, off + size), dtype=complex)
        k = off
        for i in range(dim):
            lin[i, i, k] = 1.0
            k += 1
        for i in range(dim):
            for j in range(i + 1, dim):
                lin[i, j, k] = lin[j, i, k] = 1.0
                lin[i, j, k + 1] = 1j
                lin[j, i, k + 1] = -1j
                k += 2
        self.nvars += size
        expr = Affine(lin, np.zeros((dim, dim), dtype=complex))
        self.blocks[name] = _Block(name, "hermitian", dim, off, size, expr)
        if psd:
            self.add_psd(expr, name=f"{name}>=0")
        return expr

    def scalar(self, name: str, cone: str = "nonneg") -> Affine:
        if cone not in ("nonneg", "free"):
            raise ValueError(f"unknown scalar cone {cone!r}")
        off = self.nvars
        lin = np.zeros((1, 1, off + 1), dtype=complex)
        lin[0, 0, off] = 1.0
        self.nvars += 1
        expr = Affine(lin, np.zeros((1, 1), dtype=complex))
        self.blocks[name] = _Block(name, cone, 1, off, 1, expr)
        if cone == "nonneg":
            self.add_nonneg(expr, name=f"{name}>=0")
        return expr

    def add_eq(self, lhs, rhs=0.0, name: str | None = None) -> None:
        lhs = _lift(lhs, (1, 1))
        self.constraints.append(_Constraint(name or self._new_name("eq"), "eq", lhs - _lift(rhs, lhs.shape)))

    def add_psd(self, expr, name: str | None = None) -> None:
        """Constrain a Hermitian-valued expression to be PSD."""
        expr = _lift(expr, (1, 1))
        if expr.shape[0] != expr.shape[1]:
            raise DimensionMismatch("PSD constraint on a non-square expression")
        self.constraints.append(_Constraint(name or self._new_name("psd"), "psd", expr))

    def add_nonneg(self, expr, name: str | None = None) -> None:
        """Constrain every (real part of an) entry to be nonnegative."""
        self.constraints.append(_Constraint(name or self._new_name("nn"), "nonneg", _lift(expr, (1, 1))))

    def minimize(self, expr) -> None:
        self.objective = _lift(expr, (1, 1))
        self.sense = 1.0

    def maximize(self, expr) -> None:
        self.objective = _lift(expr, (1, 1))
        self.sense = -1.0

    def size(self) -> int:
        return max((c.expr.shape[0] for c in self.constraints if c.kind == "psd"), default=0)


@dataclass
class ConicSolution:
    status: str  # optimal | infeasible | unbounded | inaccurate
    objective: float
    dual_objective: float
    gap: float
    primal: dict = field(default_factory=dict)
    dual: dict = field(default_factory=dict)
    residual: float = 0.0
    x: np.ndarray | None = field(default=None, repr=False)
    certificate: np.ndarray | None = field(default=None, repr=False)
    solver_status: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def value(self, expr: Affine) -> np.ndarray:
        return expr.value(self.x)


def _svec_index(n: int):
    """Row/col of each entry of Clarabel's scaled upper-triangular vectorisation."""
    rows, cols = [], []
    for j in range(n):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    rows, cols = np.array(rows), np.array(cols)
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return rows, cols, scale


def _embed(lin: np.ndarray, c: np.ndarray):
    """Real-symmetric embedding, applied to lin (r,c,k) and const."""
    if np.abs(lin.imag).max(initial=0.0) == 0 and np.abs(c.imag).max(initial=0.0) == 0:
        return lin.real, c.real
    lr, li = lin.real, lin.imag
    top = np.concatenate([lr, -li], axis=1)
    bot = np.concatenate([li, lr], axis=1)
    cr, ci = c.real, c.imag
    return (np.concatenate([top, bot], axis=0),
            np.block([[cr, -ci], [ci, cr]]))


def _equality_rows(cons: list[_Constraint], nx: int):
    rows_a, rows_b, owners = [], [], []
    for idx, con in enumerate(cons):
        lin = con.expr._pad(nx).reshape(-1, nx)
        c = con.expr.const.reshape(-1)
        for part in (np.real, np.imag):
            a = part(lin)
            b = -part(c)
            keep = (np.abs(a).max(axis=1) > 0) | (np.abs(b) > 0)
            rows_a.append(a[keep])
            rows_b.append(b[keep])
            owners.extend([idx] * int(keep.sum()))
    if not rows_a:
        return np.zeros((0, nx)), np.zeros(0), []
    return np.concatenate(rows_a), np.concatenate(rows_b), owners


def _independent_rows(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if a.shape[0] == 0:
        return np.arange(0)
    _, r, piv = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return np.arange(0)
    rank = int((diag > tol * max(diag[0], 1.0)).sum())
    return np.sort(piv[:rank])


def solve(problem: ConicProblem) -> ConicSolution:
    """Solve ``problem``; the result carries status, primal/dual values and gap.

    An inconsistent set of linear equalities is detected before the solver
    is called and reported as ``infeasible`` with a Farkas vector ``y``
    (``y^T A = 0``, ``y^T b != 0``) in ``certificate``.

    :raises SolverFailure: on numerical breakdown of the solver.
    """
    if problem.objective is None:
        problem.minimize(0.0)
    nx = problem.nvars
    eqs = [c for c in problem.constraints if c.kind == "eq"]
    a_eq, b_eq, _ = _equality_rows(eqs, nx)
    keep = _independent_rows(a_eq)
    if a_eq.shape[0]:
        x0, *_ = np.linalg.lstsq(a_eq, b_eq, rcond=None)
        resid = a_eq @ x0 - b_eq
        if np.abs(resid).max() > 1e-8 * max(1.0, np.abs(b_eq).max()):
            return ConicSolution("infeasible", np.inf, np.inf, 0.0, certificate=resid,
                                 solver_status="InconsistentEqualities")
    a_eq, b_eq = a_eq[keep], b_eq[keep]

    a_blocks, b_blocks, cones, layout = [a_eq], [b_eq], [], []
    if a_eq.shape[0]:
        cones.append(clarabel.ZeroConeT(a_eq.shape[0]))
    row = a_eq.shape[0]
    for con in problem.constraints:
        if con.kind == "nonneg":
            lin = con.expr._pad(nx).reshape(-1, nx).real
            c = con.expr.const.reshape(-1).real
            # s = b - A x >= 0 with s = lin x + c
            a_blocks.append(-lin)
            b_blocks.append(c)
            cones.append(clarabel.NonnegativeConeT(lin.shape[0]))
            layout.append((con, "nonneg", row, lin.shape[0], None))
            row += lin.shape[0]
        elif con.kind == "psd":
            lin, c = _embed(con.expr._pad(nx), con.expr.const)
            lin = (lin + lin.transpose(1, 0, 2)) / 2
            c = (c + c.T) / 2
            n = c.shape[0]
            r, cc, scale = _svec_index(n)
            a_blocks.append(-lin[r, cc, :] * scale[:, None])
            b_blocks.append(c[r, cc] * scale)
            cones.append(clarabel.PSDTriangleConeT(n))
            layout.append((con, "psd", row, len(r), (n, r, cc, scale)))
            row += len(r)
    a_mat = sp.csc_matrix(np.concatenate(a_blocks)) if row else sp.csc_matrix((0, nx))
    b_vec = np.concatenate(b_blocks) if row else np.zeros(0)

    obj = problem.objective
    q = problem.sense * obj._pad(nx).reshape(-1).real
    offset = problem.sense * float(obj.const.real[0, 0])

    st = clarabel.DefaultSettings()
    st.verbose = False
    st.max_threads = 1
    st.max_iter = settings.max_solver_iter
    st.tol_gap_abs = st.tol_gap_rel = settings.solver_tol
    st.tol_feas = settings.solver_tol
    st.tol_infeas_abs = st.tol_infeas_rel = 1e-10
    p_mat = sp.csc_matrix((nx, nx))
    try:
        raw = clarabel.DefaultSolver(p_mat, q, a_mat, b_vec, cones, st).solve()
    except Exception as exc:  # pragma: no cover - solver-internal panic
        raise SolverFailure(str(exc)) from exc
    status_name = str(raw.status)
    if status_name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return ConicSolution("infeasible", np.inf, np.inf, 0.0, certificate=np.asarray(raw.z),
                             solver_status=status_name)
    if status_name in ("DualInfeasible", "AlmostDualInfeasible"):
        return ConicSolution("unbounded", -np.inf, -np.inf, 0.0, solver_status=status_name)
    if status_name == "NumericalError":
        raise SolverFailure("solver reported a numerical error")

    x = np.asarray(raw.x)
    z = np.asarray(raw.z)
    primal_obj = raw.obj_val + offset
    dual_obj = raw.obj_val_dual + offset
    gap = abs(primal_obj - dual_obj)
    objective = problem.sense * primal_obj
    dual_objective = problem.sense * dual_obj

    primal = {}
    for name, blk in problem.blocks.items():
        v = blk.expr.value(x)
        primal[name] = v if blk.kind == "hermitian" else float(v.real[0, 0])

    dual, resid = {}, 0.0
    if a_eq.shape[0]:
        resid = float(np.abs(a_eq @ x - b_eq).max())
    for con, kind, start, length, meta in layout:
        zz = z[start:start + length]
        if kind == "nonneg":
            dual[con.name] = zz.copy()
            resid = max(resid, float(-(con.expr.value(x).real).min()))
        else:
            n, r, cc, scale = meta
            w = np.zeros((n, n))
            w[r, cc] = zz / scale
            w = w + np.triu(w, 1).T
            m = con.expr.shape[0]
            if n == 2 * m:
                pp, qq, ss = w[:m, :m], w[:m, m:], w[m:, m:]
                dual[con.name] = (pp + ss) + 1j * (qq.T - qq)
            else:
                dual[con.name] = w.astype(complex)
            val = con.expr.value(x)
            resid = max(resid, float(-np.linalg.eigvalsh((val + val.conj().T) / 2).min()))

    status = "optimal"
    if status_name not in ("Solved", "AlmostSolved"):
        status = "inaccurate"
    elif gap > settings.accept_tol * max(1.0, abs(primal_obj)) or resid > settings.accept_tol:
        status = "inaccurate"
    return ConicSolution(status, float(objective), float(dual_objective), float(gap), primal, dual,
                         float(resid), x, None, status_name)

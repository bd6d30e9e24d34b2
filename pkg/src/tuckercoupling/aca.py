"""Adaptive cross approximation, dense and with a Tucker-compressed ``U``.

Both variants build ``Z ~ U V^H`` from pivot rows and columns, stopping once
``||x|| ||y|| <= eps * sqrt(s)`` where ``s`` tracks ``||U V^H||_F**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .compression import (
    NULL_TRACKER,
    SCALAR_BYTES,
    decompress_column,
    max_rank,
    row_to_index,
)
from .errors import ContractViolation
from .matvec import adjoint_columns, forward_columns
from .tensor_core import element, from_vector, hosvd

# residual rows below this magnitude count as exactly zero
ZERO_PIVOT = 1e-300
# ... as do residual rows that cancelled to roundoff against the original row
ZERO_PIVOT_REL = 1e-12
# HOSVD tolerance inside tucker_aca relative to the ACA tolerance
HOSVD_FACTOR = 3.0
# hosvd needs a tolerance below one; loose ACA tolerances are clipped here
HOSVD_EPS_MAX = 0.9


@dataclass(frozen=True)
class MatrixOracle:
    """Row/column access to an ``m1 x m2`` matrix that is never stored."""

    row: object
    col: object
    shape: tuple

    @classmethod
    def from_dense(cls, Z):
        Z = np.asarray(Z)
        return cls(lambda i: Z[i, :].copy(), lambda j: Z[:, j].copy(), Z.shape)

    @classmethod
    def from_scene(cls, scene):
        centers = scene.grid.centers()
        return cls(
            lambda i: kernels.row_vector(scene, i),
            lambda j: kernels.column_vector(scene, j, centers),
            (scene.n_rows, scene.m),
        )


@dataclass(frozen=True)
class ACAFactors:
    """``Z ~ U V^H``; ``U`` is dense or a tuple of ``r_c`` columns of ``q`` Tucker tensors."""

    V: np.ndarray
    eps: float
    U: np.ndarray = None
    U_store: tuple = None
    dims: tuple = None
    q: int = None
    hosvd_eps: float = None
    kernel_id: int = 255
    k0: float = 0.0
    history: tuple = field(default=(), compare=False)
    pivots: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if (self.U is None) == (self.U_store is None):
            raise ContractViolation("exactly one of U and U_store must be given")
        if self.U_store is not None:
            object.__setattr__(self, "U_store", tuple(tuple(c) for c in self.U_store))
            object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
            if len(self.U_store) != self.V.shape[1]:
                raise ContractViolation("U_store and V disagree on the rank")
        elif self.U.shape[1] != self.V.shape[1]:
            raise ContractViolation("U and V disagree on the rank")
        if not np.all(np.isfinite(self.V)):
            raise ContractViolation("V has non-finite entries")

    @property
    def is_compressed(self):
        return self.U_store is not None

    @property
    def rank(self):
        return self.V.shape[1]

    @property
    def n_rows(self):
        if self.is_compressed:
            n1, n2, n3 = self.dims
            return self.q * n1 * n2 * n3
        return self.U.shape[0]

    @property
    def shape(self):
        return (self.n_rows, self.V.shape[0])

    def u_dense(self):
        """Dense ``U`` (decompressing the store when necessary)."""
        if not self.is_compressed:
            return self.U
        U = np.empty((self.n_rows, self.rank), dtype=complex)
        for l, col in enumerate(self.U_store):
            U[:, l] = decompress_column(col)
        return U

    def max_tucker_rank(self):
        return max_rank(self.U_store) if self.is_compressed and self.U_store else 0

    def to_dense(self):
        return self.u_dense() @ self.V.conj().T


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise ContractViolation(f"eps must lie in (0, 1), got {eps}")


def _exhausted(residual, original):
    peak = np.max(np.abs(residual))
    return peak <= ZERO_PIVOT or peak <= ZERO_PIVOT_REL * np.max(np.abs(original))


def _first_row(row, m1):
    # the first pivot row is row 0; all-zero leading rows fall through to the next one
    for i in range(m1):
        r = np.asarray(row(i), dtype=complex)
        if np.max(np.abs(r)) > ZERO_PIVOT:
            return i, r
    return None, r


def aca_dense(oracle, eps):
    """Partial-pivot ACA holding ``U`` densely."""
    _check_eps(eps)
    m1, m2 = oracle.shape
    us, vs, history, pivots = [], [], [], []
    s = 0.0
    used = set()
    i, r = _first_row(oracle.row, m1)
    if i is None:
        return ACAFactors(np.zeros((m2, 0), complex), eps, U=np.zeros((m1, 0), complex))
    for k in range(min(m1, m2)):
        if k > 0:
            z = np.asarray(oracle.row(i), dtype=complex)
            t = np.array([u[i] for u in us])
            r = z - np.conj(np.array(vs)).T @ t
            if _exhausted(r, z):
                break
        used.add(i)
        j = int(np.argmax(np.abs(r)))
        y = np.conj(r / r[j])
        x = np.asarray(oracle.col(j), dtype=complex)
        for u, v in zip(us, vs):
            x = x - u * np.conj(v[j])
        step = (np.linalg.norm(x) * np.linalg.norm(y)) ** 2
        cross = 0.0
        for u, v in zip(us, vs):
            cross += np.real(np.vdot(u, x) * np.vdot(y, v))
        s = s + step + 2.0 * cross
        us.append(x)
        vs.append(y)
        pivots.append((i, j))
        stat = np.sqrt(step / s) if s > 0 else 0.0
        history.append(stat)
        if np.sqrt(step) <= eps * np.sqrt(s):
            break
        ax = np.abs(x)
        ax[list(used)] = -1.0
        i = int(np.argmax(ax))
    U = np.array(us).T if us else np.zeros((m1, 0), complex)
    V = np.array(vs).T if vs else np.zeros((m2, 0), complex)
    return ACAFactors(V, eps, U=U, history=tuple(history), pivots=tuple(pivots))


def row_of_compressed_U(fac, i):
    """Row ``i`` of a compressed ``U`` from single-element Tucker decompressions."""
    if not fac.is_compressed:
        raise ContractViolation("factors hold a dense U")
    return _compressed_row(fac.U_store, fac.dims, fac.q, i)


def _compressed_row(store, dims, q, i):
    f1, f2, f3, comp = row_to_index(i, dims, q)
    return np.array([element(col[comp], f1, f2, f3) for col in store], dtype=complex)


def tucker_aca(col_provider, row_provider, dims, q, eps, hosvd_eps=None, tracker=NULL_TRACKER):
    """ACA whose ``U`` columns are stored Tucker-compressed as they are accepted.

    ``col_provider(j)`` returns a flattened (component-major) matrix column and
    ``row_provider(i)`` a matrix row.  Only one dense column plus a few
    temporaries of that size are alive at any time.
    """
    _check_eps(eps)
    if hosvd_eps is None:
        hosvd_eps = min(HOSVD_FACTOR * eps, HOSVD_EPS_MAX)
    dims = tuple(int(n) for n in dims)
    n_v = dims[0] * dims[1] * dims[2]
    m1 = q * n_v
    col_bytes = m1 * SCALAR_BYTES

    store, vs, history, pivots = [], [], [], []
    s = 0.0
    used = set()
    i, r = _first_row(row_provider, m1)
    m2 = r.shape[0]
    if i is None:
        return ACAFactors(np.zeros((m2, 0), complex), eps, U_store=(), dims=dims, q=q, hosvd_eps=hosvd_eps)

    for k in range(min(m1, m2)):
        if k > 0:
            z = np.asarray(row_provider(i), dtype=complex)
            t = _compressed_row(store, dims, q, i)
            r = z - np.conj(np.array(vs)).T @ t
            if _exhausted(r, z):
                break
        used.add(i)
        j = int(np.argmax(np.abs(r)))
        y = np.conj(r / r[j])

        x = np.asarray(col_provider(j), dtype=complex)
        tracker.allocate(col_bytes)
        if k > 0:
            V = np.array(vs).T
            # forward product with the single right-hand side conj(V[j, :]); holds Y plus one decompressed column
            tracker.allocate(2 * col_bytes)
            x = x - forward_columns(store, np.conj(V[j]), m1)
            tracker.release(2 * col_bytes)

        step = (np.linalg.norm(x) * np.linalg.norm(y)) ** 2
        s_next = s + step
        if k > 0:
            # adjoint product gives U^H x; the Frobenius cross term is 2 Re sum (U^H x) * conj(V^H y)
            tracker.allocate(col_bytes)
            uhx = adjoint_columns(store, x, m1)
            tracker.release(col_bytes)
            s_next += 2.0 * np.sum(np.real(uhx * np.conj(V.conj().T @ y)))
        s = s_next

        store.append(tuple(hosvd(from_vector(x[c * n_v:(c + 1) * n_v], dims), hosvd_eps) for c in range(q)))
        vs.append(y)
        pivots.append((i, j))
        stat = np.sqrt(step / s) if s > 0 else 0.0
        history.append(stat)
        if np.sqrt(step) <= eps * np.sqrt(max(s, 0.0)):
            tracker.release(col_bytes)
            break
        ax = np.abs(x)
        ax[list(used)] = -1.0
        i = int(np.argmax(ax))
        tracker.release(col_bytes)

    V = np.array(vs).T
    return ACAFactors(
        V, eps, U_store=tuple(store), dims=dims, q=q, hosvd_eps=hosvd_eps,
        history=tuple(history), pivots=tuple(pivots),
    )


def tucker_aca_scene(scene, eps, hosvd_eps=None, tracker=NULL_TRACKER):
    """:func:`tucker_aca` on a scene's coupling matrix, rows evaluated straight from the kernels."""
    oracle = MatrixOracle.from_scene(scene)
    fac = tucker_aca(oracle.col, oracle.row, scene.grid.dims, scene.q, eps, hosvd_eps, tracker)
    return ACAFactors(
        fac.V, fac.eps, U_store=fac.U_store, dims=fac.dims, q=fac.q, hosvd_eps=fac.hosvd_eps,
        kernel_id=int(scene.kernel.operator), k0=scene.kernel.k0, history=fac.history, pivots=fac.pivots,
    )


__all__ = [
    "ACAFactors",
    "MatrixOracle",
    "aca_dense",
    "row_of_compressed_U",
    "tucker_aca",
    "tucker_aca_scene",
]

"""Dense 3D tensors, n-mode products and truncated HOSVD.

A ``Tensor3`` is a plain complex ``numpy.ndarray`` of shape ``(n1, n2, n3)``.
Its linear (vector) layout is mode-1 fastest, i.e. Fortran order, so the
entry ``(i1, i2, i3)`` lives at ``i1 + n1*i2 + n1*n2*i3``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

# below this Frobenius norm a tensor is treated as exactly zero
ZERO_NORM = 1e-300


def to_vector(t):
    """Flatten a 3D tensor, mode-1 index fastest."""
    return np.asarray(t).ravel(order="F")


def from_vector(v, dims):
    """Inverse of :func:`to_vector`."""
    dims = tuple(int(d) for d in dims)
    v = np.asarray(v)
    if v.size != dims[0] * dims[1] * dims[2]:
        raise ContractViolation(f"vector of length {v.size} cannot be reshaped to {dims}")
    return v.reshape(dims, order="F")


def unfold(t, mode):
    """Mode-``mode`` unfolding: that axis as rows, remaining axes in increasing order as columns."""
    t = np.asarray(t)
    rest = [ax for ax in range(t.ndim) if ax != mode]
    return np.transpose(t, [mode] + rest).reshape(t.shape[mode], -1)


@dataclass(frozen=True)
class TuckerTensor:
    """Orthogonal Tucker model ``core x_1 U1 x_2 U2 x_3 U3``."""

    core: np.ndarray
    factors: tuple

    def __post_init__(self):
        if self.core.ndim != 3 or len(self.factors) != 3:
            raise ContractViolation("TuckerTensor needs a 3D core and three factors")
        for g, u in enumerate(self.factors):
            if u.ndim != 2 or u.shape[1] != self.core.shape[g]:
                raise ContractViolation(
                    f"factor {g} has shape {u.shape}, core size along mode {g} is {self.core.shape[g]}"
                )
            if u.shape[1] > u.shape[0]:
                raise ContractViolation(f"rank {u.shape[1]} exceeds size {u.shape[0]} on mode {g}")

    @property
    def dims(self):
        return tuple(u.shape[0] for u in self.factors)

    @property
    def ranks(self):
        return tuple(self.core.shape)

    @property
    def nbytes(self):
        """Complex scalars stored (core + factors) times 16 bytes."""
        n = self.core.size + sum(u.size for u in self.factors)
        return 16 * n


def mode_product(t, m, mode):
    """Contract axis ``mode`` (0, 1 or 2) of ``t`` with the columns of ``m``.

    The output has ``m.shape[0]`` entries along ``mode``; for ``mode=0``
    ``out[i, b, c] = sum_a t[a, b, c] * m[i, a]``.
    """
    t = np.asarray(t)
    m = np.asarray(m)
    if mode not in (0, 1, 2) or t.ndim != 3:
        raise ContractViolation(f"mode must be 0, 1 or 2 on a 3D tensor, got mode {mode}")
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ContractViolation(
            f"mode {mode}: matrix has {m.shape[-1] if m.ndim else 0} columns but tensor has "
            f"{t.shape[mode]} entries along that mode"
        )
    out = np.tensordot(m, t, axes=(1, mode))
    return np.moveaxis(out, 0, mode)


def _truncation_rank(s, budget):
    # smallest r with sum(s[r:]**2) <= budget
    tail = np.cumsum((s ** 2)[::-1])[::-1]  # tail[r] = sum(s[r:]**2)
    ok = np.nonzero(tail <= budget)[0]
    r = int(ok[0]) if ok.size else len(s)
    return max(r, 1)


def zero_tucker(dims):
    """Rank-(1,1,1) Tucker tensor with a zero core."""
    factors = []
    for n in dims:
        e = np.zeros((n, 1), dtype=complex)
        e[0, 0] = 1.0
        factors.append(e)
    return TuckerTensor(np.zeros((1, 1, 1), dtype=complex), tuple(factors))


def hosvd(t, eps):
    """Truncated higher-order SVD of a 3D tensor.

    Each mode keeps the fewest left singular vectors of its unfolding such
    that the discarded squared singular values sum to at most
    ``eps**2 / 3 * ||t||_F**2``.  The three discarded energies add up to at
    most ``eps**2 * ||t||_F**2``, which bounds the relative reconstruction
    error by ``eps``.
    """
    if not 0.0 < eps < 1.0:
        raise ContractViolation(f"eps must lie in (0, 1), got {eps}")
    t = np.asarray(t, dtype=complex)
    if t.ndim != 3:
        raise ContractViolation(f"expected a 3D tensor, got shape {t.shape}")
    norm = np.linalg.norm(t)
    if norm < ZERO_NORM:
        return zero_tucker(t.shape)

    budget = eps * eps / 3.0 * norm * norm
    factors = []
    for mode in range(3):
        u, s, _ = np.linalg.svd(unfold(t, mode), full_matrices=False)
        r = _truncation_rank(s, budget)
        factors.append(np.ascontiguousarray(u[:, :r]))

    core = t
    for mode, u in enumerate(factors):
        core = mode_product(core, u.conj().T, mode)
    return TuckerTensor(np.ascontiguousarray(core), tuple(factors))


def reconstruct(tt):
    """Full tensor ``core x_1 U1 x_2 U2 x_3 U3``."""
    out = tt.core
    for mode, u in enumerate(tt.factors):
        out = mode_product(out, u, mode)
    return out


def reconstruct_flops(tt):
    """Complex multiply-adds spent by :func:`reconstruct` (mode 1, then 2, then 3)."""
    (n1, n2, n3), (r1, r2, r3) = tt.dims, tt.ranks
    return n1 * r1 * r2 * r3 + n1 * n2 * r2 * r3 + n1 * n2 * n3 * r3


def element(tt, i1, i2, i3):
    """Single entry of the decompressed tensor in O(r1*r2*r3)."""
    for g, (i, n) in enumerate(zip((i1, i2, i3), tt.dims)):
        if not 0 <= i < n:
            raise ContractViolation(f"index {i} out of range for mode {g} of size {n}")
    u1, u2, u3 = tt.factors
    return complex(np.einsum("abc,a,b,c->", tt.core, u1[i1], u2[i2], u3[i3]))

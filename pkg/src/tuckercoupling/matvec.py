"""Forward and adjoint products with compressed coupling matrices.

Columns are decompressed one at a time and folded into the result, so the
dense matrix never exists.  ``forward`` accumulates ``Y += col_j X[j, :]``;
``adjoint`` forms ``Y[j, :] = col_j^H Phi``.
"""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import kernels
from .compression import decompress_column
from .errors import ContractViolation
from .tensor_core import reconstruct_flops


class OpCounter:
    """Accumulates complex multiply-adds spent decompressing and accumulating."""

    def __init__(self):
        self._lock = threading.Lock()
        self.decompress = 0
        self.accumulate = 0

    def add(self, decompress, accumulate):
        with self._lock:
            self.decompress += decompress
            self.accumulate += accumulate


def _as_2d(x, rows, name):
    x = np.asarray(x)
    vector = x.ndim == 1
    if vector:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != rows:
        raise ContractViolation(f"{name} has shape {np.shape(x)}, expected {rows} rows")
    if x.shape[1] < 1:
        raise ContractViolation(f"{name} needs at least one column")
    return x, vector


def _chunks(n, workers):
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run(chunks, work, workers):
    if workers <= 1 or len(chunks) == 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, chunks))


def forward_columns(columns, X, n_rows, workers=1, counter=None):
    """``Y = Z X`` for ``Z`` given as Tucker-compressed columns."""
    X, vector = _as_2d(X, len(columns), "X")
    p = X.shape[1]

    def work(chunk):
        Y = np.zeros((n_rows, p), dtype=complex)
        for j in chunk:
            col = decompress_column(columns[j])
            Y += np.outer(col, X[j])
            if counter is not None:
                counter.add(sum(reconstruct_flops(tt) for tt in columns[j]), n_rows * p)
        return Y

    parts = _run(_chunks(len(columns), max(1, workers)), work, workers)
    Y = parts[0]
    for part in parts[1:]:
        Y += part
    return Y[:, 0] if vector else Y


def adjoint_columns(columns, Phi, n_rows, workers=1, counter=None):
    """``Y = Z^H Phi`` for ``Z`` given as Tucker-compressed columns."""
    Phi, vector = _as_2d(Phi, n_rows, "Phi")
    Y = np.zeros((len(columns), Phi.shape[1]), dtype=complex)

    def work(chunk):
        for j in chunk:
            col = decompress_column(columns[j])
            Y[j] = col.conj() @ Phi
            if counter is not None:
                counter.add(sum(reconstruct_flops(tt) for tt in columns[j]), n_rows * Phi.shape[1])

    _run(_chunks(len(columns), max(1, workers)), work, workers)
    return Y[:, 0] if vector else Y


def forward(cc, X, workers=1, counter=None):
    """Product of the compressed coupling matrix with ``X`` of shape ``(m, p)``."""
    return forward_columns(cc.columns, X, cc.shape[0], workers, counter)


def adjoint(cc, Phi, workers=1, counter=None):
    """Conjugate-transpose product with ``Phi`` of shape ``(q*n_v, p)``."""
    return adjoint_columns(cc.columns, Phi, cc.shape[0], workers, counter)


def aca_forward(fac, X, workers=1, counter=None):
    """``U (V^H X)``; a compressed ``U`` goes through the column-wise product."""
    X, vector = _as_2d(X, fac.V.shape[0], "X")
    W = fac.V.conj().T @ X
    if fac.is_compressed:
        Y = forward_columns(fac.U_store, W, fac.n_rows, workers, counter)
    else:
        Y = fac.U @ W
    return Y[:, 0] if vector else Y


def aca_adjoint(fac, Phi, workers=1, counter=None):
    """``V (U^H Phi)``."""
    Phi, vector = _as_2d(Phi, fac.n_rows, "Phi")
    if fac.is_compressed:
        W = adjoint_columns(fac.U_store, Phi, fac.n_rows, workers, counter)
    else:
        W = fac.U.conj().T @ Phi
    Y = fac.V @ W
    return Y[:, 0] if vector else Y


def dense_forward(scene, X, mem_cap=kernels.DEFAULT_MEM_CAP):
    """Ground-truth ``Z X`` from the fully assembled matrix."""
    Z = kernels.assemble_full(scene, mem_cap)
    X, vector = _as_2d(X, scene.m, "X")
    Y = Z @ X
    return Y[:, 0] if vector else Y


def dense_adjoint(scene, Phi, mem_cap=kernels.DEFAULT_MEM_CAP):
    """Ground-truth ``Z^H Phi``."""
    Z = kernels.assemble_full(scene, mem_cap)
    Phi, vector = _as_2d(Phi, scene.n_rows, "Phi")
    Y = Z.conj().T @ Phi
    return Y[:, 0] if vector else Y

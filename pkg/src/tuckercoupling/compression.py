"""Column-wise Tucker compression of coupling matrices and memory accounting."""
from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation
from .tensor_core import hosvd, reconstruct, to_vector

SCALAR_BYTES = 16


class WorkingMemoryTracker:
    """Test hook recording the dense working buffers an algorithm holds.

    Algorithms call :meth:`allocate` when a dense temporary comes alive and
    :meth:`release` when it is dropped; ``peak`` is the high-water mark.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.current = 0
        self.peak = 0

    def allocate(self, nbytes):
        with self._lock:
            self.current += nbytes
            self.peak = max(self.peak, self.current)

    def release(self, nbytes):
        with self._lock:
            self.current -= nbytes


class _NullTracker:
    def allocate(self, nbytes):
        pass

    def release(self, nbytes):
        pass


NULL_TRACKER = _NullTracker()


@dataclass(frozen=True)
class CompressedCoupling:
    """Coupling matrix stored as ``m`` columns of ``q`` Tucker tensors each."""

    dims: tuple
    q: int
    kernel_id: int
    k0: float
    eps: float
    columns: tuple

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "columns", tuple(tuple(c) for c in self.columns))
        if not self.eps > 0:
            raise ContractViolation(f"eps must be positive, got {self.eps}")
        for j, col in enumerate(self.columns):
            if len(col) != self.q:
                raise ContractViolation(f"column {j} has {len(col)} components, expected {self.q}")
            for tt in col:
                if tt.dims != self.dims:
                    raise ContractViolation(f"column {j}: tensor dims {tt.dims} != grid dims {self.dims}")

    @property
    def m(self):
        return len(self.columns)

    @property
    def n_voxels(self):
        n1, n2, n3 = self.dims
        return n1 * n2 * n3

    @property
    def shape(self):
        return (self.q * self.n_voxels, self.m)

    def column(self, j):
        """Decompress column ``j`` into a dense component-major vector."""
        return decompress_column(self.columns[j])

    def to_dense(self):
        Z = np.empty(self.shape, dtype=complex)
        for j in range(self.m):
            Z[:, j] = self.column(j)
        return Z


def decompress_column(tensors):
    return np.concatenate([to_vector(reconstruct(tt)) for tt in tensors])


def compress_column(scene, j, eps, centers=None, tracker=NULL_TRACKER):
    col_bytes = scene.q * scene.grid.n_voxels * SCALAR_BYTES
    unfold_bytes = scene.grid.n_voxels * SCALAR_BYTES
    try:
        tensors = kernels.assemble_column(scene, j, centers)
    except Exception as exc:
        raise type(exc)(f"column {j}: {exc}") from exc
    tracker.allocate(col_bytes)
    out = []
    for t in tensors:
        # one unfolding copy is alive inside hosvd at a time
        tracker.allocate(unfold_bytes)
        out.append(hosvd(t, eps))
        tracker.release(unfold_bytes)
    tracker.release(col_bytes)
    return tuple(out)


def compress_matrix(scene, eps, workers=1, tracker=NULL_TRACKER):
    """Assemble and Tucker-compress every column of the scene's coupling matrix.

    Columns are generated and compressed one at a time per worker, so the
    dense matrix is never resident.
    """
    if not 0.0 < eps < 1.0:
        raise ContractViolation(f"eps must lie in (0, 1), got {eps}")
    centers = scene.grid.centers()

    def work(j):
        return compress_column(scene, j, eps, centers, tracker)

    if workers <= 1:
        columns = [work(j) for j in range(scene.m)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(work, range(scene.m)))
    return CompressedCoupling(
        scene.grid.dims, scene.q, int(scene.kernel.operator), scene.kernel.k0, eps, columns
    )


def tucker_bytes(tt):
    (n1, n2, n3), (r1, r2, r3) = tt.dims, tt.ranks
    return SCALAR_BYTES * (r1 * r2 * r3 + n1 * r1 + n2 * r2 + n3 * r3)


def max_rank(columns):
    return max(max(tt.ranks) for col in columns for tt in col)


def memory_report(cc):
    """Compressed vs full storage in bytes, their ratio and the largest Tucker rank."""
    compressed = sum(tucker_bytes(tt) for col in cc.columns for tt in col)
    full = kernels.full_matrix_bytes(cc.q, cc.n_voxels, cc.m)
    return {
        "compressed_bytes": compressed,
        "full_bytes": full,
        "factor": full / compressed,
        "max_rank": max_rank(cc.columns),
    }


def row_to_index(row, dims, q):
    """Split a coupling-matrix row into ``(f1, f2, f3, component)``."""
    n1, n2, n3 = dims
    n_v = n1 * n2 * n3
    if not 0 <= row < q * n_v:
        raise ContractViolation(f"row {row} out of range for {q * n_v} rows")
    comp, v = divmod(row, n_v)
    return v % n1, (v // n1) % n2, v // (n1 * n2), comp


def index_to_row(f1, f2, f3, comp, dims, q):
    n1, n2, n3 = dims
    if not (0 <= f1 < n1 and 0 <= f2 < n2 and 0 <= f3 < n3 and 0 <= comp < q):
        raise ContractViolation(f"index {(f1, f2, f3, comp)} out of range for grid {dims}, q={q}")
    return comp * n1 * n2 * n3 + f1 + n1 * (f2 + n2 * f3)

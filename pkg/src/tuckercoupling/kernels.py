"""Scene geometry and Green's-function coupling kernels.

Sources are point dipoles standing in for RWG edges (midpoint, unit
direction, edge-length weight); observation points are voxel centres.
Entry ``(k, v)`` of coupling column ``j`` is Cartesian component ``k`` of
the field radiated by source ``j`` at voxel ``v``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ContractViolation, SceneError, SingularityError

C0 = 299792458.0
MIN_SEPARATION = 1e-12
DEFAULT_MEM_CAP = 4 * 1024 ** 3


def wavenumber(freq_mhz):
    """Free-space wavenumber (rad/m) for a frequency in MHz."""
    return 2.0 * math.pi * freq_mhz * 1e6 / C0


def wavelength(freq_mhz):
    return C0 / (freq_mhz * 1e6)


class Operator(enum.IntEnum):
    EFIELD = 0  # curl-curl of g p
    HFIELD = 1  # curl of g p


@dataclass(frozen=True)
class VoxelGrid:
    origin: tuple
    h: float
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if not self.h > 0:
            raise SceneError(f"voxel spacing must be positive, got {self.h}")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise SceneError(f"grid dims must be three positive integers, got {self.dims}")

    @classmethod
    def centered(cls, center, h, dims):
        """Grid whose bounding box is centred on ``center``."""
        dims = tuple(int(n) for n in dims)
        origin = tuple(c - 0.5 * n * h for c, n in zip(center, dims))
        return cls(origin, h, dims)

    @property
    def n_voxels(self):
        n1, n2, n3 = self.dims
        return n1 * n2 * n3

    def center(self, i1, i2, i3):
        return np.asarray(self.origin) + self.h * (np.array([i1, i2, i3]) + 0.5)

    def centers(self):
        """All voxel centres, shape ``(n_v, 3)``, mode-1 index fastest."""
        axes = [o + self.h * (np.arange(n) + 0.5) for o, n in zip(self.origin, self.dims)]
        x, y, z = np.meshgrid(*axes, indexing="ij")
        return np.stack([x.ravel(order="F"), y.ravel(order="F"), z.ravel(order="F")], axis=1)

    def nearest_center_distance(self, point):
        """Distance from ``point`` to the closest voxel centre."""
        p = np.asarray(point, dtype=float)
        idx = np.rint((p - np.asarray(self.origin)) / self.h - 0.5)
        idx = np.clip(idx, 0, np.asarray(self.dims) - 1)
        return float(np.linalg.norm(p - self.center(*idx)))


@dataclass(frozen=True)
class EdgeSource:
    midpoint: tuple
    direction: tuple
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "midpoint", tuple(float(x) for x in self.midpoint))
        object.__setattr__(self, "direction", tuple(float(x) for x in self.direction))
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-12:
            raise SceneError(f"source direction {self.direction} is not a unit vector")
        if not self.weight > 0:
            raise SceneError(f"source weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class KernelSpec:
    operator: Operator
    k0: float
    q: int = 3

    def __post_init__(self):
        object.__setattr__(self, "operator", Operator(self.operator))
        if self.k0 < 0:
            raise SceneError(f"wavenumber must be non-negative, got {self.k0}")
        if self.q != 3:
            raise SceneError("only q = 3 (one unknown per Cartesian component) is supported")


@dataclass(frozen=True)
class SceneSpec:
    grid: VoxelGrid
    sources: tuple
    kernel: KernelSpec
    # sources must stay this many voxel spacings away from every voxel centre
    guard: float = field(default=2.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.sources:
            raise SceneError("a scene needs at least one source")
        limit = self.guard * self.grid.h
        for j, src in enumerate(self.sources):
            d = self.grid.nearest_center_distance(src.midpoint)
            if d < limit:
                raise SceneError(
                    f"source {j} at {src.midpoint} is {d:.4g} m from a voxel centre "
                    f"(minimum {limit:.4g} m)",
                    source_index=j,
                )

    @property
    def m(self):
        return len(self.sources)

    @property
    def q(self):
        return self.kernel.q

    @property
    def n_rows(self):
        return self.q * self.grid.n_voxels

    def source_arrays(self):
        mid = np.array([s.midpoint for s in self.sources])
        p = np.array([s.direction for s in self.sources])
        w = np.array([s.weight for s in self.sources])
        return mid, p, w


# ---------------------------------------------------------------------------
# kernels


def greens(r, rp, k0):
    """Scalar free-space Helmholtz Green's function ``exp(-i k0 R) / (4 pi R)``."""
    R = float(np.linalg.norm(np.asarray(r, dtype=float) - np.asarray(rp, dtype=float)))
    if R < MIN_SEPARATION:
        raise SingularityError(f"source and observation points coincide (R = {R:.3g} m)")
    return np.exp(-1j * k0 * R) / (4.0 * math.pi * R)


def _separation(obs, mid):
    d = np.atleast_2d(np.asarray(obs, dtype=float) - np.asarray(mid, dtype=float))
    R = np.sqrt(np.einsum("ij,ij->i", d, d))
    if R.size and R.min() < MIN_SEPARATION:
        raise SingularityError(f"source and observation points coincide (R = {R.min():.3g} m)")
    return d, R


def efield_coefficients(R, k0):
    """Coefficients ``(a, b)`` with curl curl (g p) = a p + b (Rhat . p) Rhat."""
    g = np.exp(-1j * k0 * R) / (4.0 * np.pi * R)
    ikR = 1j * k0 / R
    invR2 = 1.0 / (R * R)
    a = g * (k0 * k0 - ikR - invR2)
    b = g * (-k0 * k0 + 3.0 * ikR + 3.0 * invR2)
    return a, b


def hfield_coefficient(R, k0):
    """Radial derivative ``dg/dR`` so that grad g = (dg/dR) Rhat."""
    g = np.exp(-1j * k0 * R) / (4.0 * np.pi * R)
    return -(1j * k0 + 1.0 / R) * g


def field(operator, mid, p, w, obs, k0):
    """Vectorised kernel: rows of ``mid``/``p``/``w`` broadcast against rows of ``obs``.

    Returns complex array of shape ``(N, 3)``.
    """
    operator = Operator(operator)
    d, R = _separation(obs, mid)
    rhat = d / R[:, None]
    p = np.broadcast_to(np.asarray(p, dtype=float), d.shape)
    w = np.broadcast_to(np.asarray(w, dtype=float), R.shape)
    if operator is Operator.EFIELD:
        if k0 == 0:
            raise ContractViolation("the curl-curl kernel needs k0 > 0")
        a, b = efield_coefficients(R, k0)
        rp = np.einsum("ij,ij->i", rhat, p)
        return w[:, None] * (a[:, None] * p + (b * rp)[:, None] * rhat)
    dg = hfield_coefficient(R, k0)
    return (w * dg)[:, None] * np.cross(rhat, p)


def efield_kernel(src, obs, k0):
    """E-type kernel: ``weight * curl curl (g p)`` at ``obs`` (3 complex components)."""
    return field(Operator.EFIELD, src.midpoint, src.direction, src.weight, obs, k0)[0]


def hfield_kernel(src, obs, k0):
    """H-type kernel: ``weight * grad g x p`` at ``obs``."""
    return field(Operator.HFIELD, src.midpoint, src.direction, src.weight, obs, k0)[0]


def kernel(spec, src, obs):
    if spec.operator is Operator.EFIELD:
        return efield_kernel(src, obs, spec.k0)
    return hfield_kernel(src, obs, spec.k0)


# ---------------------------------------------------------------------------
# assembly


def assemble_column(scene, j, centers=None):
    """Column ``j`` as ``q`` tensors of the grid shape.

    ``centers`` may carry precomputed :meth:`VoxelGrid.centers` to avoid
    rebuilding them for every column.
    """
    if not 0 <= j < scene.m:
        raise ContractViolation(f"source index {j} out of range for {scene.m} sources")
    if centers is None:
        centers = scene.grid.centers()
    src = scene.sources[j]
    f = field(scene.kernel.operator, src.midpoint, src.direction, src.weight, centers, scene.kernel.k0)
    dims = scene.grid.dims
    return [f[:, k].reshape(dims, order="F") for k in range(scene.q)]


def column_vector(scene, j, centers=None):
    """Column ``j`` flattened, component-major."""
    if not 0 <= j < scene.m:
        raise ContractViolation(f"source index {j} out of range for {scene.m} sources")
    if centers is None:
        centers = scene.grid.centers()
    src = scene.sources[j]
    f = field(scene.kernel.operator, src.midpoint, src.direction, src.weight, centers, scene.kernel.k0)
    return f.T.ravel()


def row_vector(scene, i):
    """Row ``i`` of the coupling matrix: one voxel component against every source."""
    n_v = scene.grid.n_voxels
    if not 0 <= i < scene.q * n_v:
        raise ContractViolation(f"row {i} out of range for {scene.q * n_v} rows")
    comp, v = divmod(i, n_v)
    n1, n2, _ = scene.grid.dims
    f1, rest = v % n1, v // n1
    f2, f3 = rest % n2, rest // n2
    obs = scene.grid.center(f1, f2, f3)
    mid, p, w = scene.source_arrays()
    return field(scene.kernel.operator, mid, p, w, obs, scene.kernel.k0)[:, comp]


def full_matrix_bytes(q, n_voxels, m):
    """Bytes of the dense coupling matrix (16 bytes per complex scalar)."""
    return 16 * q * n_voxels * m


def check_capacity(scene, mem_cap=DEFAULT_MEM_CAP):
    need = full_matrix_bytes(scene.q, scene.grid.n_voxels, scene.m)
    if need > mem_cap:
        raise CapacityError(
            f"dense coupling matrix needs {need} bytes, cap is {mem_cap}; "
            "use the compressed assembly instead"
        )
    return need


def assemble_full(scene, mem_cap=DEFAULT_MEM_CAP):
    """Dense ``(q*n_v, m)`` coupling matrix, rows component-major and voxels mode-1 fastest."""
    check_capacity(scene, mem_cap)
    centers = scene.grid.centers()
    Z = np.empty((scene.n_rows, scene.m), dtype=complex)
    for j in range(scene.m):
        Z[:, j] = column_vector(scene, j, centers)
    return Z


# ---------------------------------------------------------------------------
# scene generators


def make_loop_scene(radius, center, n_segments, grid, kernel, guard=2.0):
    """Circular loop in the plane normal to y, discretised into equal chords.

    Source ``j`` sits on the circle at angle ``2 pi (j + 1/2) / n`` measured
    in the x-z plane, points along the tangent and carries the chord length
    ``2 radius sin(pi / n)`` as weight.
    """
    if n_segments < 3:
        raise SceneError(f"a loop needs at least 3 segments, got {n_segments}")
    cx, cy, cz = center
    chord = 2.0 * radius * math.sin(math.pi / n_segments)
    sources = []
    for j in range(n_segments):
        theta = 2.0 * math.pi * (j + 0.5) / n_segments
        mid = (cx + radius * math.cos(theta), cy, cz + radius * math.sin(theta))
        tangent = (-math.sin(theta), 0.0, math.cos(theta))
        sources.append(EdgeSource(mid, tangent, chord))
    return SceneSpec(grid, sources, kernel, guard=guard)


def make_plate_scene(side, center, n_edges, grid, kernel, guard=2.0):
    """Square plate in the plane normal to y, ``n_edges`` lattice divisions per side.

    The plate is split into ``n_edges**2`` square cells of pitch
    ``side / n_edges``; each cell carries one source at its centre whose
    direction alternates between x and z in a checkerboard pattern.
    """
    if n_edges < 1:
        raise SceneError(f"n_edges must be at least 1, got {n_edges}")
    cx, cy, cz = center
    pitch = side / n_edges
    sources = []
    for a in range(n_edges):
        for b in range(n_edges):
            mid = (cx - 0.5 * side + (a + 0.5) * pitch, cy, cz - 0.5 * side + (b + 0.5) * pitch)
            direction = (1.0, 0.0, 0.0) if (a + b) % 2 == 0 else (0.0, 0.0, 1.0)
            sources.append(EdgeSource(mid, direction, pitch))
    return SceneSpec(grid, sources, kernel, guard=guard)

"""Desk-scale sweep drivers: rank and memory versus distance, frequency,
plate mesh and ACA tolerance, plus compress / matvec benchmark runs.

Every sweep returns a list of row dicts with a fixed key order; see
``SCHEMAS``.
"""
from __future__ import annotations

import csv
import json
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__, kernels, persistence
from .aca import ACAFactors, tucker_aca_scene
from .compression import compress_matrix, memory_report
from .errors import ContractViolation, SceneError
from .matvec import aca_adjoint, aca_forward, adjoint, forward

WORKERS_ENV = "TUCKERCOUPLING_WORKERS"

KINDS = ("distance", "frequency", "mesh", "tolerance", "compress", "matvec-bench")

SCHEMAS = {
    "distance": ["d", "max_rank", "compressed_bytes", "full_bytes", "factor"],
    "frequency": ["f_mhz", "h", "n", "max_rank", "compressed_bytes", "full_bytes"],
    "mesh": ["n_edges", "n_sources", "pitch", "max_rank", "compressed_bytes"],
    "tolerance": ["eps", "r_c", "max_tucker_rank_of_U", "matvec_rel_err_vs_dense"],
}


@dataclass
class ExperimentConfig:
    kind: str = "compress"
    kernel: str = "H"
    eps: float = 1e-8
    seed: int = 0
    workers: int = 1
    mem_cap_bytes: int = kernels.DEFAULT_MEM_CAP
    out: str = None
    # voxel domain: cube centred at the origin
    grid_dims: list = field(default_factory=lambda: [26, 26, 26])
    spacing: float = 0.04
    frequency_mhz: float = 298.06
    # loop source
    scene: str = "loop"
    loop_radius: float = 0.5
    loop_segments: int = 60
    distance: float = 0.8
    distances: list = field(default_factory=lambda: [0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0, 1.05])
    # frequency sweep: fixed physical domain edge, spacing = wavelength / points_per_wavelength
    domain_size: float = 0.5
    points_per_wavelength: float = 20.0
    frequencies_mhz: list = field(default_factory=lambda: [300.0, 600.0, 900.0, 1200.0, 1500.0])
    # plate source
    plate_side: float = 0.866
    n_edges: int = 4
    refinements: list = field(default_factory=lambda: [1, 2, 4, 8, 16])
    # tolerance sweep / compress
    tolerances: list = field(default_factory=lambda: [1e-3, 1e-4, 1e-5, 1e-6])
    method: str = "tucker"
    # matvec bench
    input: str = None
    p: int = 8

    def validate(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown experiment kind {self.kind!r}")
        if self.kernel not in ("E", "H"):
            raise ContractViolation(f"kernel must be 'E' or 'H', got {self.kernel!r}")
        if self.scene not in ("loop", "plate"):
            raise ContractViolation(f"scene must be 'loop' or 'plate', got {self.scene!r}")
        if self.method not in ("tucker", "aca"):
            raise ContractViolation(f"method must be 'tucker' or 'aca', got {self.method!r}")
        for name in ("distances", "frequencies_mhz", "refinements", "tolerances", "grid_dims"):
            if not getattr(self, name):
                raise ContractViolation(f"{name} must be a non-empty list")
        if len(self.grid_dims) != 3:
            raise ContractViolation("grid_dims needs three entries")
        if not 0 < self.eps < 1:
            raise ContractViolation(f"eps must lie in (0, 1), got {self.eps}")
        if self.workers < 1 or self.p < 1:
            raise ContractViolation("workers and p must be at least 1")
        return self


# desk-scale presets; a config file or CLI flags override them
PRESETS = {
    "distance": {},
    "frequency": {"loop_radius": 0.25, "loop_segments": 40, "distance": 0.35},
    "mesh": {"grid_dims": [20, 20, 20], "spacing": 0.05, "distance": 0.6},
    "tolerance": {
        "grid_dims": [16, 16, 16], "spacing": 0.03125, "loop_segments": 150,
        "distance": 0.9, "eps": 1e-3,
    },
    "compress": {"grid_dims": [12, 12, 12], "spacing": 1 / 12, "loop_segments": 20},
    "matvec-bench": {"grid_dims": [12, 12, 12], "spacing": 1 / 12, "loop_segments": 20},
}


def make_config(kind, file_values=None, overrides=None):
    """Preset for ``kind`` < values from a JSON config < explicit overrides."""
    names = {f.name for f in fields(ExperimentConfig)}
    merged = {"kind": kind}
    merged.update(PRESETS.get(kind, {}))
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key not in names:
                raise ContractViolation(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = value
    merged["kind"] = kind
    return ExperimentConfig(**merged).validate()


def load_config_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ContractViolation(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ContractViolation("config must be a JSON object")
    return data


# ---------------------------------------------------------------------------
# scenes


def _kernel(cfg, freq_mhz=None):
    op = kernels.Operator.EFIELD if cfg.kernel == "E" else kernels.Operator.HFIELD
    return kernels.KernelSpec(op, kernels.wavenumber(cfg.frequency_mhz if freq_mhz is None else freq_mhz))


def _grid(cfg):
    return kernels.VoxelGrid.centered((0.0, 0.0, 0.0), cfg.spacing, cfg.grid_dims)


def loop_scene(cfg, d=None, grid=None, kern=None):
    d = cfg.distance if d is None else d
    return kernels.make_loop_scene(
        cfg.loop_radius, (0.0, d, 0.0), cfg.loop_segments, grid or _grid(cfg), kern or _kernel(cfg)
    )


def plate_scene(cfg, n_edges=None, grid=None):
    n_edges = cfg.n_edges if n_edges is None else n_edges
    return kernels.make_plate_scene(
        cfg.plate_side, (0.0, cfg.distance, 0.0), n_edges, grid or _grid(cfg), _kernel(cfg)
    )


def build_scene(cfg):
    return loop_scene(cfg) if cfg.scene == "loop" else plate_scene(cfg)


# ---------------------------------------------------------------------------
# sweeps


def run_distance_sweep(cfg):
    """Loop coil moved away from the cube along y; one row per distance."""
    grid, kern = _grid(cfg), _kernel(cfg)
    rows = []
    for d in cfg.distances:
        try:
            scene = loop_scene(cfg, d, grid, kern)
        except SceneError as exc:
            raise SceneError(f"distance {d}: {exc}", exc.source_index) from exc
        rep = memory_report(compress_matrix(scene, cfg.eps, cfg.workers))
        rows.append({"d": d, **{k: rep[k] for k in ("max_rank", "compressed_bytes", "full_bytes", "factor")}})
    return rows


def frequency_grid(cfg, freq_mhz):
    """Grid of fixed physical size with spacing tied to the wavelength."""
    h = kernels.wavelength(freq_mhz) / cfg.points_per_wavelength
    n = max(1, int(round(cfg.domain_size / h)))
    return kernels.VoxelGrid.centered((0.0, 0.0, 0.0), h, (n, n, n))


def run_frequency_sweep(cfg):
    rows = []
    for f in cfg.frequencies_mhz:
        grid = frequency_grid(cfg, f)
        scene = loop_scene(cfg, grid=grid, kern=_kernel(cfg, f))
        rep = memory_report(compress_matrix(scene, cfg.eps, cfg.workers))
        rows.append({
            "f_mhz": f, "h": grid.h, "n": grid.dims[0], "max_rank": rep["max_rank"],
            "compressed_bytes": rep["compressed_bytes"], "full_bytes": rep["full_bytes"],
        })
    return rows


def run_mesh_sweep(cfg):
    grid = _grid(cfg)
    rows = []
    for n in cfg.refinements:
        scene = plate_scene(cfg, n, grid)
        rep = memory_report(compress_matrix(scene, cfg.eps, cfg.workers))
        rows.append({
            "n_edges": n, "n_sources": scene.m, "pitch": cfg.plate_side / n,
            "max_rank": rep["max_rank"], "compressed_bytes": rep["compressed_bytes"],
        })
    return rows


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def relative_error(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def run_tolerance_sweep(cfg):
    """Tucker-ACA at each tolerance; product error against the dense matrix."""
    scene = build_scene(cfg)
    Z = kernels.assemble_full(scene, cfg.mem_cap_bytes)
    x = random_complex(np.random.default_rng(cfg.seed), scene.m)
    y = Z @ x
    rows = []
    for eps in cfg.tolerances:
        fac = tucker_aca_scene(scene, eps)
        rows.append({
            "eps": eps, "r_c": fac.rank, "max_tucker_rank_of_U": fac.max_tucker_rank(),
            "matvec_rel_err_vs_dense": relative_error(aca_forward(fac, x, cfg.workers), y),
        })
    return rows


SWEEPS = {
    "distance": run_distance_sweep,
    "frequency": run_frequency_sweep,
    "mesh": run_mesh_sweep,
    "tolerance": run_tolerance_sweep,
}


def linear_fit_r2(x, y):
    """Coefficient of determination of a least-squares line through ``(x, y)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid ** 2) / ss_tot) if ss_tot > 0 else 1.0


# ---------------------------------------------------------------------------
# compress / bench


def run_compress(cfg):
    """Compress the configured scene and write a CTC1 (tucker) or CTA1 (aca) file."""
    scene = build_scene(cfg)
    t0 = time.perf_counter()
    if cfg.method == "aca":
        obj = tucker_aca_scene(scene, cfg.eps)
        summary = {
            "format": "CTA1", "r_c": obj.rank, "max_tucker_rank_of_U": obj.max_tucker_rank(),
            "hosvd_eps": obj.hosvd_eps,
        }
    else:
        obj = compress_matrix(scene, cfg.eps, cfg.workers)
        summary = {"format": "CTC1", **memory_report(obj)}
    elapsed = time.perf_counter() - t0
    if cfg.out:
        persistence.save(obj, cfg.out)
    summary.update({"m": scene.m, "dims": list(scene.grid.dims), "q": scene.q, "eps": cfg.eps,
                    "compress_seconds": elapsed})
    return obj, summary


def bench_inputs(cfg, n_rows, m):
    rng = np.random.default_rng(cfg.seed)
    return random_complex(rng, (m, cfg.p)), random_complex(rng, (n_rows, cfg.p))


def run_matvec_bench(cfg):
    """Load a container, time forward/adjoint products and compare with the dense oracle when it fits."""
    if not cfg.input:
        raise ContractViolation("matvec-bench needs an input file")
    obj = persistence.load(cfg.input)
    is_aca = isinstance(obj, ACAFactors)
    n_rows, m = obj.shape
    X, Phi = bench_inputs(cfg, n_rows, m)
    fwd = aca_forward if is_aca else forward
    adj = aca_adjoint if is_aca else adjoint

    t0 = time.perf_counter()
    Y = fwd(obj, X, cfg.workers)
    t1 = time.perf_counter()
    Psi = adj(obj, Phi, cfg.workers)
    t2 = time.perf_counter()
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(Psi))):
        raise FloatingPointError("non-finite entries in matvec results")

    report = {
        "format": "CTA1" if is_aca else "CTC1", "rows": n_rows, "m": m, "p": cfg.p,
        "forward_seconds": max(t1 - t0, 1e-9), "adjoint_seconds": max(t2 - t1, 1e-9),
    }
    scene = build_scene(cfg)
    if scene.grid.dims == tuple(obj.dims) and scene.m == m and \
            kernels.full_matrix_bytes(scene.q, scene.grid.n_voxels, m) <= cfg.mem_cap_bytes:
        Z = kernels.assemble_full(scene, cfg.mem_cap_bytes)
        report["forward_rel_err"] = relative_error(Y, Z @ X)
        report["adjoint_rel_err"] = relative_error(Psi, Z.conj().T @ Phi)
    return {"Y": Y, "Psi": Psi}, report


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, float):
        if not math.isfinite(v):
            raise FloatingPointError(f"non-finite value {v} in result table")
        return repr(v)
    return str(v)


def write_csv(rows, path, kind):
    columns = SCHEMAS[kind]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def metadata(cfg, wall_seconds, extra=None):
    meta = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "wall_seconds": wall_seconds,
        "config": asdict(cfg),
    }
    meta.update(extra or {})
    return meta


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


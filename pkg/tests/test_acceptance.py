"""End-to-end acceptance checks; each prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
repeated at the end of the session.
"""
import time
import tracemalloc

import numpy as np
import pytest

from tuckercoupling import experiments as ex, kernels as K, persistence
from tuckercoupling.aca import MatrixOracle, aca_dense, tucker_aca_scene
from tuckercoupling.compression import (
    WorkingMemoryTracker,
    compress_matrix,
    memory_report,
    tucker_bytes,
)
from tuckercoupling.kernels import EdgeSource
from tuckercoupling.matvec import aca_adjoint, aca_forward, adjoint, forward
from tuckercoupling.tensor_core import hosvd, reconstruct

from conftest import loop_scene_12
from oracles import fd_curl, fd_curl_curl, random_configuration, rel_err

# compression factor at d = 1.05 m from the first full distance sweep
PINNED_FAR_FACTOR = 13.21


@pytest.fixture
def report(request):
    lines = request.config.__dict__.setdefault("acceptance_lines", [])

    def record(tag, ok, detail):
        line = f"criterion {tag}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)
        return ok

    return record


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_1_hosvd_contract(report):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_err, worst_orth = 0.0, 0.0
    ok = True
    for case in range(200):
        dims = tuple(int(n) for n in rng.integers(4, 33, 3))
        eps = (1e-2, 1e-4, 1e-8)[case % 3]
        # mix of full-rank noise and low-rank structure
        if case % 2:
            t = crandn(rng, *dims)
        else:
            r = [int(rng.integers(1, min(n, 6) + 1)) for n in dims]
            core = crandn(rng, *r)
            us = [crandn(rng, n, k) for n, k in zip(dims, r)]
            t = np.einsum("abc,ia,jb,kc->ijk", core, *us) + 1e-6 * crandn(rng, *dims)
        tt = hosvd(t, eps)
        err = np.linalg.norm(reconstruct(tt) - t) / np.linalg.norm(t)
        orth = max(np.abs(u.conj().T @ u - np.eye(u.shape[1])).max() for u in tt.factors)
        worst_err = max(worst_err, err / eps)
        worst_orth = max(worst_orth, orth)
        ok &= err <= eps and orth <= 1e-12
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    report("1", ok, f"max err/eps={worst_err:.3f} max orth dev={worst_orth:.1e} time={elapsed:.1f}s")
    assert ok


def test_2_oracle_equivalence(report):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    scene = loop_scene_12(m=20)
    cc = compress_matrix(scene, 1e-8)
    Z = K.assemble_full(scene)
    X = crandn(rng, scene.m, 8)
    Phi = crandn(rng, scene.n_rows, 8)
    Y, Psi = forward(cc, X), adjoint(cc, Phi)
    fwd = rel_err(Y, Z @ X)
    adj = rel_err(Psi, Z.conj().T @ Phi)
    x, phi = X[:, 0], Phi[:, 0]
    lhs = np.vdot(phi, forward(cc, x))
    rhs = np.vdot(adjoint(cc, phi), x)
    ident = abs(lhs - rhs) / abs(lhs)
    elapsed = time.perf_counter() - t0
    ok = fwd <= 5e-8 and adj <= 5e-8 and ident <= 1e-12 and elapsed < 60
    report("2", ok, f"fwd={fwd:.2e} adj={adj:.2e} identity={ident:.1e} time={elapsed:.1f}s")
    assert ok


def test_3_kernel_correctness(report):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst_e = worst_h = 0.0
    for _ in range(100):
        mid, p, w, obs, k0 = random_configuration(rng)
        src = EdgeSource(mid, p, w)
        worst_e = max(worst_e, rel_err(K.efield_kernel(src, obs, k0), fd_curl_curl(mid, p, w, obs, k0)))
        worst_h = max(worst_h, rel_err(K.hfield_kernel(src, obs, k0), fd_curl(mid, p, w, obs, k0)))
    elapsed = time.perf_counter() - t0
    ok = worst_e <= 1e-5 and worst_h <= 1e-5 and elapsed < 10
    report("3", ok, f"E max rel err={worst_e:.1e} H max rel err={worst_h:.1e} time={elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def distance_rows():
    t0 = time.perf_counter()
    rows = ex.run_distance_sweep(ex.make_config("distance"))
    return rows, time.perf_counter() - t0


@pytest.mark.slow
def test_4a_distance_rank_monotone(report, distance_rows):
    rows, elapsed = distance_rows
    ranks = [r["max_rank"] for r in rows]
    ok = len(rows) == 10 and all(a >= b for a, b in zip(ranks, ranks[1:])) and elapsed < 600
    report("4a", ok, f"max ranks {ranks} over d={rows[0]['d']}..{rows[-1]['d']} time={elapsed:.0f}s")
    assert ok


@pytest.mark.slow
def test_4b_distance_factor_at_least_20(report, distance_rows):
    rows, _ = distance_rows
    factor = rows[-1]["factor"]
    ok = factor >= 20
    report("4b", ok, f"factor at farthest distance={factor:.2f} (needs >= 20)")
    assert ok


@pytest.mark.slow
def test_4c_distance_factor_pinned(report, distance_rows):
    rows, _ = distance_rows
    factor = rows[-1]["factor"]
    ok = abs(factor - PINNED_FAR_FACTOR) <= 0.1 * PINNED_FAR_FACTOR
    report("4c", ok, f"factor={factor:.2f} pinned {PINNED_FAR_FACTOR} +-10%")
    assert ok


def test_4d_full_matrix_anchor(report):
    # 125 triangles around the loop give 124 edge unknowns
    mib = K.full_matrix_bytes(3, 101 ** 3, 124) / 2 ** 20
    ok = round(mib) == 5848
    report("4d", ok, f"101^3 grid, 124 unknowns: {mib:.2f} MiB")
    assert ok


@pytest.mark.slow
def test_5_frequency_sweep(report):
    t0 = time.perf_counter()
    rows = ex.run_frequency_sweep(ex.make_config("frequency"))
    elapsed = time.perf_counter() - t0
    mem = [r["compressed_bytes"] for r in rows]
    r2 = ex.linear_fit_r2([r["f_mhz"] for r in rows], mem)
    ok = len(rows) >= 5 and all(a < b for a, b in zip(mem, mem[1:])) and r2 >= 0.9 and elapsed < 600
    report("5", ok, f"compressed bytes {mem} R^2={r2:.4f} time={elapsed:.0f}s")
    assert ok


def test_6_mesh_sweep(report):
    t0 = time.perf_counter()
    rows = ex.run_mesh_sweep(ex.make_config("mesh"))
    elapsed = time.perf_counter() - t0
    ranks = [r["max_rank"] for r in rows]
    ok = len(rows) >= 5 and all(a >= b for a, b in zip(ranks, ranks[1:])) and elapsed < 600
    report("6", ok, f"max ranks {ranks} for n_edges {[r['n_edges'] for r in rows]} time={elapsed:.0f}s")
    assert ok


def test_7_aca_exactness(report):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    Z5 = crandn(rng, 200, 5) @ crandn(rng, 5, 100)
    f5 = aca_dense(MatrixOracle.from_dense(Z5), 1e-12)
    err5 = rel_err(f5.to_dense(), Z5)
    Z1 = np.outer(crandn(rng, 200), crandn(rng, 100).conj())
    f1 = aca_dense(MatrixOracle.from_dense(Z1), 1e-12)
    err1 = rel_err(f1.to_dense(), Z1)
    elapsed = time.perf_counter() - t0
    ok = f5.rank <= 6 and err5 <= 1e-12 and f1.rank == 1 and err1 <= 1e-12 and elapsed < 5
    report("7", ok, f"rank-5: r_c={f5.rank} err={err5:.1e}; rank-1: r_c={f1.rank} err={err1:.1e}")
    assert ok


def test_8_tucker_aca_fidelity(report):
    t0 = time.perf_counter()
    cfg = ex.make_config("tolerance")
    scene = ex.build_scene(cfg)
    dense_bytes = K.full_matrix_bytes(scene.q, scene.grid.n_voxels, scene.m)
    rows = ex.run_tolerance_sweep(cfg)
    elapsed = time.perf_counter() - t0
    errs_ok = all(r["matvec_rel_err_vs_dense"] <= 10 * r["eps"] for r in rows)
    ranks = [r["r_c"] for r in rows]
    ok = (errs_ok and all(a <= b for a, b in zip(ranks, ranks[1:]))
          and dense_bytes <= 100e6 and elapsed < 600)
    detail = ", ".join(f"eps={r['eps']:.0e}: r_c={r['r_c']} err={r['matvec_rel_err_vs_dense']:.1e}" for r in rows)
    report("8", ok, f"{detail}; dense {dense_bytes / 1e6:.1f} MB time={elapsed:.0f}s")
    assert ok


def _traced(fn):
    tracemalloc.start()
    try:
        out = fn()
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return out, peak


def test_9_memory_discipline(report):
    cfg = ex.make_config("tolerance")
    scene = ex.build_scene(cfg)
    col = scene.n_rows * 16
    full = K.full_matrix_bytes(scene.q, scene.grid.n_voxels, scene.m)

    tr = WorkingMemoryTracker()
    cc, peak_c = _traced(lambda: compress_matrix(scene, 1e-8, tracker=tr))
    store_c = memory_report(cc)["compressed_bytes"]
    tracked_c = tr.peak
    extra_c = (peak_c - store_c) / col

    tr_a = WorkingMemoryTracker()
    fac, peak_a = _traced(lambda: tucker_aca_scene(scene, 1e-6, tracker=tr_a))
    store_a = sum(tucker_bytes(tt) for c in fac.U_store for tt in c) + fac.V.nbytes
    extra_a = (peak_a - store_a) / col

    ok = (tracked_c <= (scene.q + 1) * scene.grid.n_voxels * 16 and tr_a.peak <= 3 * col
          and extra_c <= 10 and extra_a <= 10
          and peak_c < full and peak_a < col * fac.rank + store_a)
    report("9", ok, f"compress: tracked {tracked_c / col:.2f} cols, traced extra {extra_c:.1f} cols "
                    f"(full matrix {scene.m} cols); aca: tracked {tr_a.peak / col:.2f} cols, "
                    f"traced extra {extra_a:.1f} cols (r_c={fac.rank})")
    assert ok


def test_10_persistence(report, tmp_path):
    rng = np.random.default_rng(10)
    scene = loop_scene_12(m=20)
    cc = compress_matrix(scene, 1e-8)
    fac = tucker_aca_scene(scene, 1e-6)
    persistence.save(cc, tmp_path / "z.ctc")
    persistence.save(fac, tmp_path / "z.cta")
    cc2 = persistence.load(tmp_path / "z.ctc")
    fac2 = persistence.load(tmp_path / "z.cta")
    X, Phi = crandn(rng, scene.m, 4), crandn(rng, scene.n_rows, 4)
    bytes_ok = (persistence.dumps_coupling(cc2) == (tmp_path / "z.ctc").read_bytes()
                and persistence.dumps_aca(fac2) == (tmp_path / "z.cta").read_bytes())
    prod_ok = (np.array_equal(forward(cc2, X, 1), forward(cc, X, 1))
               and np.array_equal(adjoint(cc2, Phi, 1), adjoint(cc, Phi, 1))
               and np.array_equal(aca_forward(fac2, X, 1), aca_forward(fac, X, 1))
               and np.array_equal(aca_adjoint(fac2, Phi, 1), aca_adjoint(fac, Phi, 1)))
    ok = bytes_ok and prod_ok
    report("10", ok, f"round trip bit-exact={bytes_ok} products bit-exact={prod_ok}")
    assert ok

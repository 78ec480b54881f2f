import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtb.engine import EngineError, exchange_halo, run_dtb, run_dtb_trace
from dtb.grid import Rect, StencilWeights, grid_compare, grid_extract, grid_new
from dtb.kernel import KernelConfig
from dtb.metrics import model_dtb_traffic
from dtb.oracle import jacobi_reference
from dtb.planner import (DeviceModel, plan_device_tiles, scratchpad_footprint,
                         tile_active_region)
from dtb.prng import random_interior

W = StencilWeights.diffusive(0.2)


def rand_grid(nx, ny, seed=0, ghost=0.0):
    return grid_new(nx, ny, random_interior(nx, ny, seed), ghost=ghost)


def assert_bit_equal(a, b):
    cmp = grid_compare(a, b)
    assert cmp.bit_equal, f"first mismatch at {cmp.first_mismatch}"


def test_single_tile_single_worker_t1_is_one_reference_step():
    g = rand_grid(8, 8, seed=1, ghost=0.5)
    plan = plan_device_tiles((8, 8), DeviceModel("one", 1, 1 << 16), 1)
    assert len(plan.tiles) == 1
    out, report = run_dtb(g, W, 1, plan)
    assert_bit_equal(out, jacobi_reference(g, W, 1))
    assert report.global_load_cells == 64
    assert report.global_store_cells == 64
    assert report.halo_exchanged_cells == 0
    assert report.redundant_compute_cells == 0
    assert report.useful_compute_cells == 64


@pytest.mark.parametrize("workers,cap", [(1, 16384), (2, 8192), (3, 4096),
                                         (8, 4096)])
def test_multi_tile_runs_match_reference_bitwise(workers, cap):
    g = rand_grid(64, 64, seed=workers, ghost=0.125)
    plan = plan_device_tiles((64, 64), DeviceModel("d", workers, cap), 4)
    assert len(plan.tiles) > 1
    out, report = run_dtb(g, W, 8, plan, KernelConfig(4))
    assert_bit_equal(out, jacobi_reference(g, W, 8))
    assert report == model_dtb_traffic(plan, 8)
    assert report.scratchpad_peak_bytes == plan.footprint_bytes


def test_input_grid_is_not_modified():
    g = rand_grid(12, 12, seed=3)
    before = g.data.copy()
    plan = plan_device_tiles((12, 12), DeviceModel("d", 2, 4096), 2)
    run_dtb(g, W, 4, plan)
    assert np.array_equal(g.data, before)


def test_results_are_bitwise_independent_of_worker_count():
    g = rand_grid(32, 32, seed=9)
    outs, reports = [], []
    for workers in (1, 2, 3, 5, 8):
        plan = plan_device_tiles((32, 32), DeviceModel("d", workers, 1 << 16), 4)
        assert len(plan.tiles) == 1
        out, report = run_dtb(g, W, 8, plan)
        outs.append(out)
        reports.append(report)
    for out in outs[1:]:
        assert_bit_equal(outs[0], out)
    # traffic through the global grid does not depend on the worker split
    assert len({r.global_load_cells for r in reports}) == 1
    assert len({r.global_store_cells for r in reports}) == 1
    # but halo exchange grows with the number of active workers
    halos = [r.halo_exchanged_cells for r in reports]
    assert halos[0] == 0 and halos == sorted(halos)


def test_tile_order_within_a_block_is_irrelevant():
    g = rand_grid(48, 48, seed=4)
    plan = plan_device_tiles((48, 48), DeviceModel("d", 4, 4096), 2)
    assert len(plan.tiles) > 2
    shuffled = dataclasses.replace(plan, tiles=tuple(reversed(plan.tiles)))
    a, ra = run_dtb(g, W, 6, plan)
    b, rb = run_dtb(g, W, 6, shuffled)
    assert_bit_equal(a, b)
    assert ra == rb


def test_thread_multiplexing_is_bitwise_invariant():
    g = rand_grid(40, 40, seed=6)
    plan = plan_device_tiles((40, 40), DeviceModel("d", 6, 8192), 4)
    base, rep0 = run_dtb(g, W, 8, plan, KernelConfig(3))
    for threads in (2, 5, 16):
        out, rep = run_dtb(g, W, 8, plan, KernelConfig(3), threads=threads)
        assert_bit_equal(base, out)
        assert rep == rep0


def test_poison_mode_does_not_leak_into_results():
    # any read of a stale cell would pull in NaN and fail the comparison
    g = rand_grid(33, 29, seed=7, ghost=1.5)
    plan = plan_device_tiles((33, 29), DeviceModel("d", 3, 6144), 4)
    clean, rc = run_dtb(g, W, 8, plan)
    poisoned, rp = run_dtb(g, W, 8, plan, poison=True)
    assert_bit_equal(clean, poisoned)
    assert not np.isnan(poisoned.data).any()
    assert rc == rp


def test_pruned_run_evolves_valid_region_like_standalone_problem():
    padded = rand_grid(40, 36, seed=11, ghost=0.0)
    valid = Rect(8, 8, 24, 20)
    plan = plan_device_tiles((40, 36), DeviceModel("d", 4, 8192), 4)
    out, report = run_dtb(padded, W, 8, plan, valid=valid)

    problem = grid_extract(padded, valid)
    want = jacobi_reference(problem, W, 8)
    assert_bit_equal(grid_extract(out, valid), want)

    # cells outside the valid rectangle are stored back frozen
    mask = np.ones((36, 40), dtype=bool)
    mask[valid.y0:valid.y1, valid.x0:valid.x1] = False
    assert np.array_equal(out.interior[mask], padded.interior[mask])
    assert report == model_dtb_traffic(plan, 8, valid)
    assert report.useful_compute_cells == valid.area * 8


def test_idle_workers_beyond_load_width():
    g = rand_grid(3, 3, seed=13, ghost=2.0)
    plan = plan_device_tiles((3, 3), DeviceModel("wide", 8, 4096), 1)
    out, report = run_dtb(g, W, 2, plan)
    assert_bit_equal(out, jacobi_reference(g, W, 2))
    assert report == model_dtb_traffic(plan, 2)


def test_rejects_bad_arguments():
    g = rand_grid(8, 8)
    plan = plan_device_tiles((8, 8), DeviceModel("d", 2, 4096), 4)
    with pytest.raises(ValueError):
        run_dtb(g, W, 6, plan)          # not a multiple of t_depth
    with pytest.raises(ValueError):
        run_dtb(g, W, 0, plan)
    with pytest.raises(ValueError):
        run_dtb(rand_grid(4, 4), W, 4, plan)   # plan/grid dims mismatch
    with pytest.raises(ValueError):
        run_dtb(g, W, 4, plan, valid=Rect(4, 4, 8, 8))   # leaves the domain
    with pytest.raises(ValueError):
        run_dtb(g, W, 4, plan, valid=Rect(2, 2, 0, 0))   # empty
    f32_plan = plan_device_tiles((8, 8), DeviceModel("d", 2, 4096), 4,
                                 elem_bytes=4)
    with pytest.raises(ValueError):
        run_dtb(g, W, 4, f32_plan)


def test_engine_refuses_buffers_beyond_stated_capacity():
    g = rand_grid(16, 16)
    plan = plan_device_tiles((16, 16), DeviceModel("big", 1, 1 << 20), 2)
    lying = dataclasses.replace(plan, device=DeviceModel("small", 1, 64))
    with pytest.raises(EngineError):
        run_dtb(g, W, 2, lying)


def test_trace_probe_bounds():
    g = rand_grid(8, 8)
    plan = plan_device_tiles((8, 8), DeviceModel("d", 1, 1 << 16), 2)
    with pytest.raises(IndexError):
        run_dtb_trace(g, W, 2, plan, probe=len(plan.tiles))
    with pytest.raises(IndexError):
        run_dtb_trace(g, W, 2, plan, probe=-1)


def test_trace_structure_and_store_snapshots():
    g = rand_grid(16, 16, seed=15)
    plan = plan_device_tiles((16, 16), DeviceModel("tiny", 2, 2048), 2)
    probe = 1
    out, _, trace = run_dtb_trace(g, W, 6, plan, probe=probe)
    tile = plan.tiles[probe]
    assert trace.tile_index == probe
    assert trace.load_region == tile.load_region
    assert len(trace.blocks) == 3
    lw, lh = tile.load_region.width, tile.load_region.height
    it = tile.interior
    for blk in trace.blocks:
        assert blk.load.shape == (lh, lw)
        assert len(blk.steps) == 2
        assert all(s.shape == (lh, lw) for s in blk.steps)
        assert blk.store.shape == (it.height, it.width)
    # the last stored slice is what the final grid holds there
    assert np.array_equal(trace.blocks[-1].store,
                          out.interior[it.y0:it.y1, it.x0:it.x1])


def test_trace_supersteps_shrink_like_the_trapezoid():
    # the front buffer after superstep s shows reference state s on the
    # active region and, due to double-buffer parity, state s-2 (then s-4,
    # ...) on the rim rings outside it
    g = rand_grid(16, 16, seed=5, ghost=0.25)
    plan = plan_device_tiles((16, 16), DeviceModel("tiny", 2, 2048), 2)
    tile = plan.tiles[1]
    load = tile.load_region
    valid = Rect(0, 0, 16, 16)
    refs = [jacobi_reference(g, W, t) for t in range(3)]

    def expected_image(s):
        base = g.data[load.y0 + 1:load.y1 + 1, load.x0 + 1:load.x1 + 1].copy()
        for t in range(2 if s % 2 == 0 else 1, s + 1, 2):
            a = tile_active_region(tile, t, valid)
            base[a.y0 - load.y0:a.y1 - load.y0,
                 a.x0 - load.x0:a.x1 - load.x0] = \
                refs[t].interior[a.y0:a.y1, a.x0:a.x1]
        return base

    for workers in (1, 2, 4):
        # same tile geometry, different worker split (capacity kept ample)
        p = dataclasses.replace(plan, device=DeviceModel("w", workers, 1 << 16))
        _, _, trace = run_dtb_trace(g, W, 2, p, probe=1)
        blk = trace.blocks[0]
        assert np.array_equal(blk.load, expected_image(0))
        assert np.array_equal(blk.steps[0], expected_image(1))
        assert np.array_equal(blk.steps[1], expected_image(2))


def test_exchange_halo_two_workers():
    f0 = np.arange(12, dtype=np.float64).reshape(3, 4)
    f1 = np.arange(12, 24, dtype=np.float64).reshape(3, 4)
    before0, before1 = f0.copy(), f1.copy()
    cells = exchange_halo([f0, f1], [2, 2])
    assert cells == 2 * 3
    assert np.array_equal(f0[:, 3], before1[:, 1])   # right halo <- neighbor's first owned
    assert np.array_equal(f1[:, 0], before0[:, 2])   # left halo <- neighbor's last owned
    assert np.array_equal(f0[:, :3], before0[:, :3])
    assert np.array_equal(f1[:, 1:], before1[:, 1:])


def test_exchange_halo_degenerate_rows():
    f = np.zeros((4, 5))
    before = f.copy()
    assert exchange_halo([f], [3]) == 0
    assert np.array_equal(f, before)
    assert exchange_halo([f, None], [3, 0]) == 0
    with pytest.raises(ValueError):
        exchange_halo([f], [3, 1])


def test_exchange_halo_reassembles_a_contiguous_row():
    rows, widths = 3, [3, 2, 2, 2]
    src = np.arange(rows * 9, dtype=np.float64).reshape(rows, 9)
    fronts, offs = [], []
    x = 0
    for w in widths:
        f = np.full((rows, w + 2), -1.0)
        f[:, 1:w + 1] = src[:, x:x + w]
        fronts.append(f)
        offs.append(x)
        x += w
    cells = exchange_halo(fronts, widths)
    assert cells == (1 + 2 + 2 + 1) * rows
    for f, w, off in zip(fronts, widths, offs):
        if off > 0:
            assert np.array_equal(f[:, 0], src[:, off - 1])
        if off + w < 9:
            assert np.array_equal(f[:, w + 1], src[:, off + w])


@settings(max_examples=15)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 3),
       st.integers(1, 2), st.integers(1, 4), st.integers(0, 4096),
       st.integers(0, 2**32))
def test_random_configs_match_reference(nx, ny, t_depth, blocks, workers,
                                        slack, seed):
    need = scratchpad_footprint(
        (min(1 + 2 * t_depth, nx + 2), min(1 + 2 * t_depth, ny + 2)),
        t_depth, 8, workers)
    plan = plan_device_tiles((nx, ny), DeviceModel("gen", workers, need + slack),
                             t_depth)
    g = rand_grid(nx, ny, seed=seed, ghost=0.75)
    steps = t_depth * blocks
    out, report = run_dtb(g, W, steps, plan, KernelConfig(2))
    assert_bit_equal(out, jacobi_reference(g, W, steps))
    assert report == model_dtb_traffic(plan, steps)

import math

import numpy as np
import pytest

from lidar_deskew.association import (
    AssociationConfig,
    find_correspondences,
)
from lidar_deskew.scan_pipeline import PatchSet


def make_patches(centers, normals, times):
    normals = np.asarray(normals, dtype=float)
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    src = np.stack([np.arange(len(times)), np.arange(len(times)) + 1], axis=1)
    return PatchSet(centers, normals, times, src)


def test_identical_patches_match_with_zero_projective_distance():
    cfg = AssociationConfig()
    patches = make_patches(
        [[1.0, 2.0], [1.0, 2.0]], [[0.0, 1.0], [0.0, 1.0]], [0.0, 2 * cfg.tau_t]
    )
    corrs = find_correspondences(patches, cfg)
    assert len(corrs) == 1
    assert corrs[0].proj_dist == pytest.approx(0.0, abs=1e-12)


def test_parallelism_gate_rejects_60_degrees():
    cfg = AssociationConfig(tau_n=0.8)
    a = math.radians(60.0)
    patches = make_patches(
        [[0.0, 0.0], [0.01, 0.0]],
        [[0.0, 1.0], [math.sin(a), math.cos(a)]],
        [0.0, 1.0],
    )
    assert find_correspondences(patches, cfg) == []


def test_smallest_projective_distance_selected():
    # Three candidate partners for patch 0 at projective distances
    # 0.05, 0.02, 0.08 (all gates pass); the 0.02 partner must win.
    n = np.array([0.0, 1.0])
    offsets = [0.025, 0.010, 0.040]  # proj = offset * |n_i + n_j| = 2 * offset
    centers = [[0.0, 0.0]] + [[0.0, off] for off in offsets]
    normals = [n] * 4
    times = [0.0, 1.0, 2.0, 3.0]
    corrs = find_correspondences(make_patches(centers, normals, times))
    by_i = {c.i: c for c in corrs}
    assert by_i[0].j == 2
    assert abs(by_i[0].proj_dist) == pytest.approx(0.02)


def test_emitted_pairs_satisfy_all_gates():
    rng = np.random.default_rng(7)
    n = 80
    centers = rng.uniform(-2, 2, size=(n, 2))
    angles = rng.uniform(0, 2 * math.pi, n)
    normals = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    times = np.sort(rng.uniform(0, 1, n))
    times += np.arange(n) * 1e-6  # strict ordering
    cfg = AssociationConfig(tau_c=1.0, tau_n=0.5, tau_t=0.1)
    patches = make_patches(centers, normals, times)
    corrs = find_correspondences(patches, cfg)
    assert corrs
    for c in corrs:
        assert np.linalg.norm(centers[c.i] - centers[c.j]) < cfg.tau_c
        assert normals[c.i] @ normals[c.j] > cfg.tau_n
        assert abs(times[c.i] - times[c.j]) > cfg.tau_t


def test_rigid_transform_invariance():
    rng = np.random.default_rng(8)
    n = 60
    centers = rng.uniform(-2, 2, size=(n, 2))
    angles = rng.uniform(0, 2 * math.pi, n)
    normals = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    times = np.arange(n) * 0.01
    cfg = AssociationConfig(tau_c=1.5, tau_n=0.6, tau_t=0.07)
    base = find_correspondences(make_patches(centers, normals, times), cfg)

    phi = 0.83
    rot = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    shift = np.array([3.0, -7.0])
    moved = find_correspondences(
        make_patches(centers @ rot.T + shift, normals @ rot.T, times), cfg
    )
    assert [(c.i, c.j) for c in base] == [(c.i, c.j) for c in moved]
    assert np.allclose(
        [c.proj_dist for c in base], [c.proj_dist for c in moved], atol=1e-9
    )


def test_large_tau_t_yields_empty_result():
    rng = np.random.default_rng(9)
    n = 40
    centers = rng.uniform(-1, 1, size=(n, 2))
    normals = np.tile([[0.0, 1.0]], (n, 1))
    times = np.arange(n) * 0.01
    cfg = AssociationConfig(tau_t=10.0)
    assert find_correspondences(make_patches(centers, normals, times), cfg) == []


def test_empty_patch_list():
    patches = PatchSet(np.empty((0, 2)), np.empty((0, 2)), np.empty(0),
                       np.empty((0, 2), dtype=int))
    assert find_correspondences(patches) == []


def test_symmetric_duplicates_deduplicated():
    cfg = AssociationConfig()
    patches = make_patches(
        [[0.0, 0.0], [0.0, 0.01]], [[0.0, 1.0], [0.0, 1.0]], [0.0, 1.0]
    )
    corrs = find_correspondences(patches, cfg)
    assert len(corrs) == 1


def test_config_validation():
    with pytest.raises(ValueError):
        AssociationConfig(tau_c=0.0)
    with pytest.raises(ValueError):
        AssociationConfig(tau_n=1.0)
    with pytest.raises(ValueError):
        AssociationConfig(tau_t=-1.0)

from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import geometry as geo
from bergmanatoms import whitney as wh


@pytest.fixture(scope="module")
def disk_cover(grid96):
    mask = grid96.rho_from_point(np.zeros(1, complex)) < 0.2
    return wh.whitney_cover(mask, grid96)


def test_cover_first_ball(disk_cover, grid96):
    # distance from the near-origin center to the complement is about 0.2,
    # so the first radius is close to 0.2 / (2K) = 0.05
    c0 = disk_cover.centers()[0]
    assert np.linalg.norm(c0) < 0.05
    assert disk_cover.radii[0] == pytest.approx(0.05, rel=0.12)


def test_cover_radius_formula(disk_cover):
    K = disk_cover.constants.K
    assert np.allclose(disk_cover.radii, disk_cover.dist / (2 * K))


def test_cover_witnesses(disk_cover, grid96):
    mu = disk_cover.constants.mu
    for i in range(disk_cover.size):
        w = grid96.nodes[disk_cover.witness_idx[i]]
        assert not disk_cover.mask[disk_cover.witness_idx[i]]
        assert geo.rho(w, disk_cover.centers()[i]) < mu * disk_cover.radii[i]


def test_cover_lambda_disjoint(disk_cover, grid96):
    lam = disk_cover.constants.lam
    hit = np.zeros(grid96.size, dtype=int)
    for i in range(disk_cover.size):
        d = grid96.rho_from_node_index(int(disk_cover.center_idx[i]))
        hit[d < lam * disk_cover.radii[i]] += 1
    assert hit.max() <= 1


def test_cover_coverage_and_overlap(disk_cover, grid96):
    nu = disk_cover.constants.nu
    covered = np.zeros(grid96.size, dtype=bool)
    counts = np.zeros(grid96.size, dtype=int)
    for i in range(disk_cover.size):
        d = grid96.rho_from_node_index(int(disk_cover.center_idx[i]))
        covered |= d < nu * disk_cover.radii[i]
        counts[d < disk_cover.radii[i]] += 1
    assert np.all(covered[disk_cover.mask])
    assert counts[disk_cover.mask].max() == disk_cover.overlap_bound


def test_cover_rejects_degenerate_masks(grid96):
    with pytest.raises(ValueError):
        wh.whitney_cover(np.zeros(grid96.size, dtype=bool), grid96)
    with pytest.raises(ValueError):
        wh.whitney_cover(np.ones(grid96.size, dtype=bool), grid96)


def test_partition_sums_to_indicator(disk_cover, grid96):
    pou = wh.partition_of_unity(disk_cover, lmax=3)
    acc = np.zeros(grid96.size)
    for i in range(pou.size):
        idx, vals = pou.phi_grid_values(i)
        np.add.at(acc, idx, vals)
    onodes = disk_cover.mask
    assert np.max(np.abs(acc[onodes] - 1.0)) < 1e-6
    assert np.max(acc[~onodes], initial=0.0) == 0.0
    assert pou.diagnostics["min_sum_psi_on_O"] >= 1.0 - 1e-9
    assert pou.diagnostics["max_sum_psi_off_O"] <= disk_cover.overlap_bound


def test_partition_norm_band(disk_cover, grid96):
    pou = wh.partition_of_unity(disk_cover, lmax=3)
    band = pou.norms_1alpha / pou.ball_volumes
    assert np.all(band > 0)
    assert np.all(band <= 1.0 + 1e-9)


def test_single_ball_partition(grid96):
    # an isolated tiny O is covered by one ball whose quotient is one on
    # its own support
    mask = grid96.rho_from_point(np.array([0.5 + 0j])) < 0.03
    cov = wh.whitney_cover(mask, grid96)
    pou = wh.partition_of_unity(cov, lmax=2)
    i = 0
    ball = cov.ball(i)
    pts = ball.center_array()[None, :]
    assert pou.phi_values(i, pts)[0] == pytest.approx(1.0)


def test_consecutive_level_radii(grid96):
    d = grid96.rho_from_point(np.zeros(1, complex))
    outer = np.abs(grid96.nodes[:, 0]) > 0.55
    inner = np.abs(grid96.nodes[:, 0]) > 0.75
    cov_o = wh.whitney_cover(outer, grid96)
    cov_i = wh.whitney_cover(inner, grid96)
    D = geo.rho_pairwise(cov_o.centers(), cov_i.centers())
    K = cov_o.constants.K
    lim = K * (cov_o.radii[:, None] + cov_i.radii[None, :])
    hit = D < lim
    for a, b in zip(*np.nonzero(hit)):
        assert cov_i.radii[b] <= 10.0 * cov_o.radii[a] * (1 + 1e-12)

from __future__ import annotations

import numpy as np
import pytest

from bergmanatoms import atoms as at
from bergmanatoms import geometry as geo
from bergmanatoms import kernel as ker
from bergmanatoms import quadrature as quad


def test_n_p_alpha_examples():
    assert at.n_p_alpha(1.0, 0.0, 1) == 0
    assert at.n_p_alpha(1.0, 0.7, 2) == 0
    assert at.n_p_alpha(2.0 / 3.0, 0.0, 1) == 2
    assert at.n_p_alpha(0.5, 0.0, 1) == 4
    # the floor convention moves integer break points up by one
    assert at.n_p_alpha(1.0, 0.0, 1, bracket="floor") == 1
    assert at.n_p_alpha(0.5, 0.0, 1, bracket="floor") == 5
    with pytest.raises(ValueError):
        at.n_p_alpha(1.5, 0.0, 1)


def test_required_l():
    assert at.required_l(1.0, 0.0, 1, 0) == 3
    assert at.required_l(2.0 / 3.0, 0.0, 1, 2) == 4
    assert at.required_l(0.5, 0.0, 1, 5) == 5


def test_config_validation(grid64):
    cfg = at.DecomposeConfig(N=0, L=2)
    with pytest.raises(ValueError, match="L = 2"):
        cfg.resolve(1.0, 0.0, 1)
    cfg2 = at.DecomposeConfig(N=1, L=3)
    assert cfg2.resolve(1.0, 0.0, 1) == (1, 3)


@pytest.fixture(scope="module")
def small_run(grid64):
    f = ker.HoloFunction.kernel_slice(1, [0.8], 2.0, label="k08")
    cfg = at.DecomposeConfig(N=1, L=3, kmax=4)
    return at.decompose(f, 1.0, 0.0, grid64, cfg)


def test_constant_decomposition(grid64):
    f = ker.HoloFunction.from_poly(1, {(0,): 2.0 + 0j}, label="const")
    res = at.decompose(f, 1.0, 0.0, grid64, at.DecomposeConfig(N=1, L=3, kmax=3))
    assert len(res.atoms) == 0
    assert res.lambda0 == pytest.approx(2.0)
    rec = at.reconstruct(res, np.array([[0.3 + 0.2j]]), grid64)
    assert abs(rec - 2.0) < 1e-10
    assert at.coefficient_lp_sum(res) == pytest.approx(2.0)


def test_zero_function(grid64):
    f = ker.HoloFunction.from_poly(1, {}, label="zero")
    res = at.decompose(f, 1.0, 0.0, grid64, at.DecomposeConfig(N=1, L=3, kmax=3))
    assert res.lambda0 == 0.0
    assert len(res.atoms) == 0
    assert at.coefficient_lp_sum(res) == 0.0
    assert at.reconstruct(res, np.array([[0.1 + 0j]]), grid64) == 0.0


def test_pipeline_identities(small_run):
    checks = at.pipeline_identity_checks(small_run)
    assert max(checks["telescoping"]) < 1e-6
    assert max(checks["annihilation"], default=0.0) < 1e-6
    assert max(checks["moments"]) < 1e-6
    assert all(np.isfinite(v) for v in checks["sizes"])


def test_atom_gate_sample(small_run, grid64):
    for a in small_run.atoms[:: max(1, len(small_run.atoms) // 25)]:
        ts = at.default_test_set(a.carrier, 1, 0.0, 1, grid64, seed=3, max_monomials=6)
        rep = at.verify_atom(a, 1.0, np.inf, 1, 0.0, ts, grid64)
        assert rep["passed"], rep
        rep2 = at.verify_atom(a, 1.0, 2.0, 1, 0.0, ts, grid64)
        assert rep2["passed"], rep2


def test_bounded_atom_verification(small_run, grid64):
    rep = at.verify_atom(small_run.atom0, 1.0, np.inf, 1, 0.0, [], grid64)
    assert rep["passed"]
    assert rep["conditions"]["bounded_sup"]["margin"] <= 1.0 + 1e-12


def test_reconstruction_error_decreases(small_run):
    errs = [at.reconstruction_error(small_run, m) for m in (0, 2, 4)]
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] < 0.05


def test_reconstruct_agrees_with_telescoped_route(small_run, grid64):
    # faithful per-z atom sum against f minus the telescoped remainder
    pl = small_run.pipeline
    zs = np.array([[0.2 + 0.1j], [0.55 - 0.3j], [0.0 + 0.0j]])
    rec = at.reconstruct(small_run, zs, grid64)
    m = pl.config.kmax
    resid = np.zeros(zs.shape[0], dtype=complex)
    if m in pl.data:
        lev = pl.data[m]
        s = grid64.n + 1 + 0.0
        for i in range(lev.pou.size):
            patch = lev.pou.patches[i]
            vals = (lev.f_patch[i] - lev.proj[i].values(patch.nodes)) * lev.pou.phi_patch_vals[i]
            inner = zs @ patch.nodes.conj().T
            resid += ((1.0 - inner) ** (-s)) @ (vals * patch.weights)
    want = pl.fvals_at(zs) - resid
    assert np.max(np.abs(rec - want)) < 5e-3 * np.max(np.abs(want))


def test_synthetic_two_bump_atom(grid64):
    # passes support/size/moment; the higher-moment margin is only reported
    sa = at.synthetic_ball_atom([0.5 + 0.2j], 0.1, 1.0, 0.0, grid64)
    ts = at.default_test_set(sa.carrier, 1, 0.0, 1, grid64, seed=0, max_monomials=6)
    rep = at.verify_atom(sa, 1.0, np.inf, 1, 0.0, ts, grid64)
    conds = rep["conditions"]
    assert conds["support"]["passed"]
    assert conds["size"]["passed"]
    assert conds["moment"]["passed"]
    assert np.isfinite(conds["higher_moments"]["margin"])


def test_projected_bump_atom_full_gate(grid64):
    f = ker.HoloFunction.kernel_slice(1, [0.75 * np.exp(0.5j)], 3.0)
    sa = at.projected_bump_atom(f, [0.55 * np.exp(0.5j)], 0.06, 2, 1.0, 0.0, grid64, L=3)
    ts = at.default_test_set(sa.carrier, 2, 0.0, 1, grid64, seed=1, max_monomials=6)
    rep = at.verify_atom(sa, 1.0, np.inf, 2, 0.0, ts, grid64)
    assert rep["passed"], rep


def test_atom_norm_bound_zero_atom(grid64):
    zero = at.AtomRecord(
        kind="bounded", level=-1, index=0,
        carrier=geo.RhoBall((0.0 + 0j,), 3.0), carrier_volume=1.0,
        lambda_paper=1.0, lambda_adj=1.0, sup_sampled=0.0,
        grid_vals=np.zeros(grid64.size),
    )
    nb = at.atom_norm_bound(zero, 1.0, 0.0, grid64)
    assert nb["norm"] == 0.0


def test_atom_norm_bound_rings(grid64):
    f = ker.HoloFunction.kernel_slice(1, [0.8 * np.exp(0.5j)], 3.0)
    sa = at.projected_bump_atom(f, [0.6 * np.exp(0.5j)], 0.05, 2, 1.0, 0.0, grid64, L=3)
    nb = at.atom_norm_bound(sa, 1.0, 0.0, grid64)
    assert np.isfinite(nb["norm"])
    assert len(nb["rings"]) >= 3
    assert nb["fitted_ratio"] < 1.0


def test_tail_tolerance_enforced(grid64):
    f = ker.HoloFunction.kernel_slice(1, [0.9], 3.0)
    with pytest.raises(RuntimeError, match="tail"):
        at.decompose(f, 0.5, 0.0, grid64,
                     at.DecomposeConfig(N=4, L=5, kmax=2, tail_tol=1e-4,
                                        extend_dictionary=False))


def test_coefficient_sum_and_lambdas(small_run):
    s = at.coefficient_lp_sum(small_run)
    manual = small_run.lambda0 + sum(a.lambda_adj for a in small_run.atoms)
    assert s == pytest.approx(manual)
    for a in small_run.atoms:
        assert a.lambda_adj >= a.lambda_paper - 1e-15
        assert a.sup_sampled * a.carrier_volume ** (1.0 / 1.0) <= a.lambda_adj * (1 + 1e-12)


def test_desk_corpus_shapes():
    corpus = at.desk_corpus(1, 0.0, seed=0)
    assert len(corpus) == 3
    labels = [f.label for f in corpus]
    assert "z^3" in labels

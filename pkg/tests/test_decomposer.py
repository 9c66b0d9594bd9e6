import warnings

import numpy as np
import pytest

from conftest import rel_coeff_error
from gadkit.apolarity import ContractError, apolar_norm, check_f
from gadkit.benchlab import random_gad
from gadkit.decomposer import (
    ClusteringError,
    DecomposeOptions,
    DecompositionReport,
    DegreeBoundError,
    LocalizationError,
    NonNilpotentBlockError,
    analyze,
    cluster_eigs,
    gad_decompose,
    mult_matrices,
    multiplicities,
    nil_index,
    solve_weights,
)
from gadkit.invsystems import GAD, GADTerm, gad_rank, reconstruct
from gadkit.polycore import LinearForm, Poly, random_homogeneous

FIXED = DecomposeOptions(random_coords=False)


def local_ops(f, seed=0, **kw):
    return mult_matrices(check_f(f), f.degree, None, np.random.default_rng(seed), **kw)


# -- multiplication matrices ------------------------------------------------------------


def test_mult_matrices_waring_shape(f_waring):
    mops = local_ops(f_waring)
    assert mops.r == 3 and len(mops.matrices) == 2
    assert all(M.shape == (3, 3) for M in mops.matrices)
    eig = np.linalg.eigvals(0.3 * mops.matrices[0] - 1.1 * mops.matrices[1])
    gaps = [abs(a - b) for i, a in enumerate(eig) for b in eig[i + 1 :]]
    assert min(gaps) > 1e-3


def test_mult_matrices_multiple_shape(f_multiple):
    mops = local_ops(f_multiple)
    assert mops.r == 6
    assert all(M.shape == (6, 6) for M in mops.matrices)


def test_mult_matrices_power_of_linear_form():
    a = (0.7, -1.3, 2.0)
    f = LinearForm((1.0, *a)).as_poly() ** 5
    mops = local_ops(f)
    assert mops.r == 1
    for M, aj in zip(mops.matrices, a):
        assert M.shape == (1, 1)
        assert M[0, 0] == pytest.approx(aj, abs=1e-12)


def test_mult_matrices_commute(f_multiple):
    mops = local_ops(f_multiple)
    assert mops.commutator <= DecomposeOptions().comm_tol


def test_mult_matrices_singular_localization():
    # every support has x0-coefficient zero, so nothing survives at x0 = 1
    f = Poly.var(3, 1) ** 4 + Poly.var(3, 2) ** 4
    with pytest.raises(LocalizationError):
        local_ops(f)


# -- clustering ---------------------------------------------------------------------------


def test_cluster_identical_values():
    assert cluster_eigs([2 + 1j] * 4) == [[0, 1, 2, 3]]


def test_cluster_gap_dominates():
    parts = cluster_eigs([0, 1e-12j, 5], cluster_tol=1e-4)
    assert sorted(len(p) for p in parts) == [1, 2]


def test_cluster_forced_count():
    vals = [0, 0.1, 0.2, 5, 5.1, 9]
    assert cluster_eigs(vals, forced_clusters=3) == [[0, 1, 2], [3, 4], [5]]
    with pytest.raises(ContractError):
        cluster_eigs(vals, forced_clusters=7)


def test_cluster_empty():
    with pytest.raises(ContractError):
        cluster_eigs([])


def test_multiplicities_examples(f_waring, f_multiple, rng):
    lbs = multiplicities(local_ops(f_waring), rng)
    assert sorted(lbs.sizes) == [1, 1, 1]
    lbs = multiplicities(local_ops(f_multiple), rng, forced_clusters=2)
    assert sorted(lbs.sizes) == [2, 4]
    # the 4-block sits at the point of the x0 support
    four = lbs.sizes.index(4)
    assert np.abs(lbs.points[four]).max() < 1e-6


def test_multiplicities_retry_cap(f_waring, rng):
    # a zero retry budget never reaches an agreeing pair of probes
    with pytest.raises(ClusteringError):
        multiplicities(local_ops(f_waring), rng, retries=0)


def test_block_validity(f_multiple, rng):
    mops = local_ops(f_multiple)
    lbs = multiplicities(mops, rng, forced_clusters=2)
    Mbar = sum(l * M for l, M in zip(lbs.probe, mops.matrices))
    R = lbs.schur_basis.conj().T @ Mbar @ lbs.schur_basis
    assert np.linalg.norm(np.tril(R, -1)) <= 1e-8 * np.linalg.norm(Mbar)
    # diagonal blocks are exactly what was split off
    start = 0
    for mu, blocks in zip(lbs.sizes, lbs.blocks):
        Bbar = sum(l * B for l, B in zip(lbs.probe, blocks))
        assert np.allclose(Bbar, R[start : start + mu, start : start + mu], atol=1e-10)
        start += mu


def test_trace_identity_waring(f_waring, rng):
    mops = local_ops(f_waring)
    lbs = multiplicities(mops, rng)
    for j, M in enumerate(mops.matrices):
        eig = np.linalg.eigvals(M)
        for pt in lbs.points:
            assert np.min(np.abs(eig - pt[j])) < 1e-8


# -- nil-index ------------------------------------------------------------------------------


def test_nil_index_scalar_block(rng):
    assert nil_index([np.array([[2.0]]), np.array([[-1.0]])], [2.0, -1.0], rng) == 1


def test_nil_index_jordan_chain(rng):
    J = np.diag(np.ones(3), 1)  # 4x4 single nilpotent chain
    assert nil_index([J, 2 * J], [0, 0], rng) == 4


def test_nil_index_non_nilpotent(rng):
    B = np.diag([0.0, 1.0])
    with pytest.raises(NonNilpotentBlockError):
        nil_index([B], [0.5], rng)
    assert nil_index([B], [0.5], rng, fallback=True) == 2


def test_nil_index_multiple_points(f_multiple, rng):
    mops = local_ops(f_multiple)
    lbs = multiplicities(mops, rng, forced_clusters=2)
    nus = sorted(nil_index(b, p, rng) for b, p in zip(lbs.blocks, lbs.points))
    assert nus == [2, 3]


# -- weights ---------------------------------------------------------------------------------


def test_solve_weights_single_power():
    ell = LinearForm((1.0, 0.4, -2.0))
    w, res = solve_weights(ell.as_poly() ** 4, [ell], [0])
    assert w[0].coeff((0, 0, 0)) == pytest.approx(1)
    assert res < 1e-12


def test_solve_weights_printed_supports(f_waring):
    supports = [
        LinearForm((-0.1744, -0.3488, -0.3488)),
        LinearForm((-0.3255, -0.3255, -0.3255)),
        LinearForm((-0.1399, -0.4196, 0.1399)),
    ]
    w, _ = solve_weights(f_waring, supports, [0, 0, 0])
    got = [p.coeff((0, 0, 0)).real for p in w]
    # four printed digits in the supports limit the agreement
    assert got == pytest.approx([-3242.32, 89.06, 2611.85], rel=2e-3)


def test_solve_weights_round_trip():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        g = random_gad(2, 6, [1, 2, 0], rng, min_separation=0.3)
        w, res = solve_weights(reconstruct(g), [t.ell for t in g.terms], [t.k for t in g.terms])
        for got, t in zip(w, g.terms):
            assert rel_coeff_error(got, t.omega) < 1e-8


def test_solve_weights_rejects_large_degree(f_waring):
    with pytest.raises(ContractError):
        solve_weights(f_waring, [LinearForm((1, 0, 0))], [5])


# -- full pipeline ----------------------------------------------------------------------------


def test_decompose_waring(f_waring):
    rep = gad_decompose(f_waring, rng=0)
    assert rep.rank == 3 and rep.multiplicities == [1, 1, 1]
    assert rep.degrees == [0, 0, 0]
    assert rep.error <= 1e-10


def test_decompose_multiple_points(f_multiple):
    rep = gad_decompose(f_multiple, rng=0)
    assert rep.rank == 6
    assert sorted(rep.multiplicities) == [2, 4]
    assert sorted(rep.nil_indices) == [2, 3]
    assert sorted(rep.degrees) == [1, 2]
    assert rep.error <= 1e-10


@pytest.mark.parametrize("opts", [DecomposeOptions(), FIXED])
def test_decompose_obstruction(f_obstruction, opts):
    with pytest.raises(DegreeBoundError) as info:
        gad_decompose(f_obstruction, opts, rng=0)
    det = info.value.details
    assert det["rank"] == 6
    assert det["multiplicities"] == [6]
    assert det["nil_indices"] == [5]
    assert info.value.exit_code == 1


def test_obstruction_point_is_origin(f_obstruction):
    with pytest.raises(DegreeBoundError) as info:
        gad_decompose(f_obstruction, FIXED, rng=0)
    assert np.abs(np.asarray(info.value.details["points"])).max() < 1e-8


def test_decompose_linear_form():
    f = Poly.linear((1.0, 2.0, -1.0))
    rep = gad_decompose(f)
    assert rep.rank == 1 and rep.error < 1e-14


def test_decompose_rejects_non_forms():
    with pytest.raises(ContractError):
        gad_decompose(Poly.var(2, 0) ** 2 + Poly.var(2, 1))
    with pytest.raises(ContractError):
        gad_decompose(Poly.zero(3))


def test_report_consistency(f_multiple):
    rep = gad_decompose(f_multiple, rng=1)
    assert isinstance(rep, DecompositionReport)
    assert sum(rep.multiplicities) == rep.rank
    assert all(nu <= mu for nu, mu in zip(rep.nil_indices, rep.multiplicities))
    assert rep.degrees == [nu - 1 for nu in rep.nil_indices]
    assert rel_coeff_error(reconstruct(rep.gad), f_multiple) <= 1e-10
    assert rep.relative_error == pytest.approx(
        apolar_norm(reconstruct(rep.gad) - f_multiple) / apolar_norm(f_multiple), abs=1e-14
    )


def test_report_json_is_a_gad(f_waring):
    rep = gad_decompose(f_waring, rng=0)
    back = GAD.from_json(rep.to_json())
    assert rel_coeff_error(reconstruct(back), f_waring) <= 1e-10


def test_same_seed_same_report(f_multiple):
    assert gad_decompose(f_multiple, rng=5).to_json() == gad_decompose(f_multiple, rng=5).to_json()


def test_normalized_supports(f_waring):
    rep = gad_decompose(f_waring, DecomposeOptions(normalize_supports=True), rng=0)
    for t in rep.gad.terms:
        assert np.linalg.norm(t.ell.array()) == pytest.approx(1)
    assert rep.error <= 1e-10


def test_forced_rank_and_clusters(f_multiple):
    rep = gad_decompose(f_multiple, DecomposeOptions(forced_rank=6, forced_clusters=2), rng=0)
    assert sorted(rep.multiplicities) == [2, 4]


def test_analyze_exposes_candidates(f_multiple):
    mops, cands = analyze(f_multiple, FIXED, rng=0)
    assert mops.r == 6
    assert cands[0].sizes == [6]
    assert any(sorted(c.sizes) == [2, 4] for c in cands)


def test_round_trip_random_gads():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        s = int(rng.integers(1, 4))
        ks = [int(k) for k in rng.integers(0, 3, size=s)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g = random_gad(3, 2 * max(ks) + 3, ks, rng, min_separation=0.3)
        try:
            rep = gad_decompose(reconstruct(g), rng=seed)
        except Exception:
            continue
        hits += rep.rank == gad_rank(g) and rep.relative_error <= 1e-8
    assert hits >= 95


def test_nil_index_law():
    for seed in range(30):
        rng = np.random.default_rng(500 + seed)
        k = int(rng.integers(0, 3))
        d = 2 * k + 3
        ell = LinearForm((1.0, *rng.standard_normal(2)))
        omega = random_homogeneous(3, k, rng)
        g = GAD(2, d, [GADTerm(omega, ell)])
        rep = gad_decompose(reconstruct(g), rng=seed)
        assert rep.nil_indices == [k + 1], seed


def test_scaling_equivariance(f_multiple):
    c = -2.5 + 0.75j
    base = gad_decompose(f_multiple, rng=2)
    scaled = gad_decompose(f_multiple * c, rng=2)
    lhs = reconstruct(base.gad) * c
    rhs = reconstruct(scaled.gad)
    assert (lhs - rhs).norm() <= 1e-8 * abs(c) * f_multiple.norm()
    for a, b in zip(base.gad.terms, scaled.gad.terms):
        u, v = a.ell.array(), b.ell.array()
        assert abs(abs(np.vdot(u, v)) - np.linalg.norm(u) * np.linalg.norm(v)) < 1e-8

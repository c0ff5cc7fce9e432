import numpy as np
import pytest
from scipy.linalg import subspace_angles

from scenetopo import emulator as em
from scenetopo import extraction as ex
from scenetopo.scene_gen import sample_scenes


def _corpus(n, seed=0, **kw):
    scenes = sample_scenes(n, seed=seed)
    p = em.make_emulator_params(seed=seed, **kw)
    H, X, ids, si = em.stack_corpus(em.build_corpus_activations(scenes, p, seed=seed), scenes)
    return p, H, X, ids, si


@pytest.fixture(scope="module")
def corpus1000():
    return _corpus(1000)


def test_prototypes_are_exact_means():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((30, 4))
    lab = np.arange(30) % 3
    pt = ex.cross_scene_prototypes(H, lab)
    for k in range(3):
        np.testing.assert_allclose(pt.prototypes[k], H[lab == k].mean(0), rtol=1e-14)
    assert pt.counts.tolist() == [10, 10, 10]
    with pytest.raises(ValueError):
        ex.cross_scene_prototypes(H, lab, n_identities=4)


def test_prototype_equals_planted_identity_without_noise_or_space():
    p = em.make_emulator_params(seed=0, noise_sigma=0.0)
    ids = np.repeat(np.arange(em.K), 5)
    H = p.object_mean(ids, np.zeros((len(ids), 3)))
    pt = ex.cross_scene_prototypes(H, ids, em.K)
    assert len(pt.identities) == 24
    np.testing.assert_allclose(pt.prototypes, p.offset + p.u_id(np.arange(em.K)), atol=1e-12)


def test_svd_basis_rank_one_antipodal():
    v = np.array([3.0, 4.0, 0.0])
    B = ex.identity_basis_svd(np.stack([v, -v]), 1)
    np.testing.assert_allclose(np.abs(B.W[:, 0]), np.abs(v) / 5, atol=1e-12)
    with pytest.raises(ValueError):
        ex.identity_basis_svd(np.stack([v, -v]), 3)
    assert ex.identity_basis_svd(np.stack([v, -v]), 2).flags  # k above numerical rank


def test_svd_basis_recovers_planted_span(corpus1000):
    p, H, X, ids, _ = corpus1000
    B = ex.identity_basis_svd(ex.cross_scene_prototypes(H, ids, 24), 23)
    assert B.k == 23 and B.provenance == "svd_prototypes"
    np.testing.assert_allclose(B.W.T @ B.W, np.eye(23), atol=1e-10)
    P = B.projector()
    np.testing.assert_allclose(P @ P, P, atol=1e-10)
    cos = np.cos(subspace_angles(p.identity_basis, B.W))
    assert cos.min() > 0.99


def test_basis_save_load(tmp_path, corpus1000):
    _, H, _, ids, _ = corpus1000
    B = ex.identity_basis_svd(ex.cross_scene_prototypes(H, ids, 24), 23)
    B.save(tmp_path / "b.npz")
    C = ex.IdentityBasis.load(tmp_path / "b.npz")
    np.testing.assert_array_equal(B.W, C.W)
    np.testing.assert_array_equal(B.singular_values, C.singular_values)
    assert C.provenance == B.provenance


def test_logistic_basis_rank_and_planted_span(corpus1000):
    p, H, _, ids, _ = corpus1000
    B = ex.identity_basis_logistic_qr(H, ids // 3, ids % 3)
    assert B.k == 9 and B.provenance == "logistic_qr"
    assert set(B.standardization) == {"mean", "std"}
    np.testing.assert_allclose(B.W.T @ B.W, np.eye(B.k), atol=1e-10)
    planted = np.hstack([p.color_basis, p.shape_basis])
    assert np.cos(subspace_angles(B.W, planted)).min() > 0.99


def test_logistic_two_class_2d_separating_normal():
    rng = np.random.default_rng(1)
    n = 400
    y = rng.integers(0, 2, n)
    H = np.column_stack([rng.normal(0, 1, n), np.where(y == 1, 3.0, -3.0) +
                         rng.normal(0, 0.3, n)])
    B = ex.identity_basis_logistic_qr(H, y, y)
    assert B.k == 1
    np.testing.assert_allclose(np.abs(B.W[:, 0]), [0, 1], atol=0.05)


def test_logistic_needs_two_classes():
    H = np.random.default_rng(0).standard_normal((20, 3))
    with pytest.raises(ValueError):
        ex.identity_basis_logistic_qr(H, np.zeros(20, int), np.arange(20) % 2)


@pytest.mark.parametrize("seed", [0, 1])
def test_logistic_and_svd_bases_agree_in_rsa(seed):
    # main-effects world: both bases can span the whole identity signal
    p, H, X, ids, si = _corpus(1000, seed, block_weights=(0.75, 0.25, 0.0), offset=False)
    Bs = ex.identity_basis_svd(ex.cross_scene_prototypes(H, ids, 24), 9)
    Bl = ex.identity_basis_logistic_qr(H, ids // 3, ids % 3)
    Xs = ex.split_by_scene(X, si)
    a = ex.rsa(ex.split_by_scene(ex.residualize(H, Bs), si), Xs).mean
    b = ex.rsa(ex.split_by_scene(ex.residualize(H, Bl), si), Xs).mean
    assert abs(a - b) < 0.05


def test_residualize_properties():
    rng = np.random.default_rng(2)
    W, _ = np.linalg.qr(rng.standard_normal((10, 3)))
    inside = rng.standard_normal((5, 3)) @ W.T
    np.testing.assert_allclose(ex.residualize(inside, W), 0, atol=1e-12)
    H = rng.standard_normal((6, 10))
    R = ex.residualize(H, W)
    np.testing.assert_allclose((R ** 2).sum(1) + ((H @ W) ** 2).sum(1), (H ** 2).sum(1),
                               rtol=1e-10)
    with pytest.raises(ValueError):
        ex.residualize(np.ones((2, 4)), W)


def test_noiseless_residualized_pca_recovers_coordinates():
    p, H, X, ids, _ = _corpus(4000, 0, noise_sigma=1e-4)
    H = p.object_mean(ids, X)  # exactly noiseless
    B = ex.identity_basis_svd(ex.cross_scene_prototypes(H, ids, 24), 23)
    Z = ex.pca_embed(ex.residualize(H, B), 3).Z
    assert ex.procrustes_correlation(Z, X) > 0.999
    assert ex.linear_map_correlation(Z, X) > 0.999


def test_pca_embed_edge_cases():
    pe = ex.pca_embed(np.tile([1.0, 2.0, 3.0], (6, 1)), 2)
    np.testing.assert_allclose(pe.Z, 0)
    assert pe.flags
    with pytest.raises(ValueError):
        ex.pca_embed(np.ones((3, 5)), 3)
    rng = np.random.default_rng(3)
    H = rng.standard_normal((50, 6))
    pe = ex.pca_embed(H, 3)
    np.testing.assert_allclose(pe.transform(H), pe.Z, atol=1e-12)
    np.testing.assert_allclose(pe.components @ pe.components.T, np.eye(3), atol=1e-12)


def test_procrustes_invariant_to_rotation_and_scale():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((40, 3))
    R, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert ex.procrustes_correlation(2.5 * X @ R + 1.0, X) == pytest.approx(1.0, abs=1e-12)
    assert ex.procrustes_correlation(rng.standard_normal((40, 3)), X) < 0.6


def test_rsa_monotone_invariance_and_null():
    rng = np.random.default_rng(5)
    X = rng.uniform(-4, 4, (8, 3))
    # cosine similarity of these features is a strictly increasing function of the kernel
    tau = ex.auto_bandwidth(X)
    from scenetopo.spectral import gaussian_kernel_graph
    K = gaussian_kernel_graph(X, tau).W + np.eye(8)
    evals, evecs = np.linalg.eigh(K)
    F = evecs * np.sqrt(np.clip(evals, 0, None))  # F F^T = K, unit diagonal
    assert ex.rsa_scene(F, X) == pytest.approx(1.0, abs=1e-12)
    vals = [ex.rsa_scene(rng.standard_normal((8, 16)), X) for _ in range(200)]
    assert abs(np.mean(vals)) < 0.2
    with pytest.raises(ValueError):
        ex.rsa_scene(np.ones((2, 3)), X[:2])


def test_rsa_flags_small_scenes():
    rng = np.random.default_rng(6)
    res = ex.rsa([rng.standard_normal((2, 4)), rng.standard_normal((5, 4))],
                 [rng.random((2, 3)), rng.random((5, 3))])
    assert np.isnan(res.per_scene[0]) and not np.isnan(res.per_scene[1])
    assert res.flags and res.mean == res.per_scene[1]


def test_residualization_raises_rsa(corpus1000):
    _, H, X, ids, si = corpus1000
    B = ex.identity_basis_svd(ex.cross_scene_prototypes(H, ids, 24), 23)
    Xs = ex.split_by_scene(X, si)
    before = ex.rsa(ex.split_by_scene(H, si), Xs).mean
    after = ex.rsa(ex.split_by_scene(ex.residualize(H, B), si), Xs).mean
    assert after > before + 0.2


def test_variance_fractions(corpus1000):
    p, H, _, _, _ = corpus1000
    assert ex.variance_subspace_fraction(H, np.eye(H.shape[1])) == pytest.approx(1.0)
    assert ex.variance_subspace_fraction(H, p.identity_basis) == pytest.approx(0.12, rel=0.05)
    assert ex.variance_subspace_fraction(H, p.spatial_basis) == pytest.approx(0.001, rel=0.1)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((H.shape[1],) * 2))
    a = ex.variance_subspace_fraction(H, Q[:, :100])
    b = ex.variance_subspace_fraction(H, Q[:, 100:])
    assert a + b == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        ex.variance_subspace_fraction(H, np.ones((H.shape[1], 2)))


def test_class_mean_subspace_rank():
    rng = np.random.default_rng(7)
    labels = np.arange(60) % 4
    H = rng.standard_normal((4, 10))[labels] + 0.01 * rng.standard_normal((60, 10))
    assert ex.class_mean_subspace(H, labels).shape == (10, 3)

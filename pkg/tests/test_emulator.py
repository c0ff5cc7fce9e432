import numpy as np
import pytest

from scenetopo import emulator as em
from scenetopo.coverage import trajectory_coverage
from scenetopo.extraction import variance_subspace_fraction
from scenetopo.scene_gen import generate_corpus, sample_scenes


@pytest.fixture(scope="module")
def params():
    return em.make_emulator_params(seed=0)


def test_planted_subspaces_are_orthonormal_and_orthogonal(params):
    B = np.hstack([params.identity_basis, params.spatial_basis])
    np.testing.assert_allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10)
    assert params.identity_basis.shape[1] == em.ID_DIM
    # identity directions live in the identity span, S in the spatial span
    P = params.identity_basis @ params.identity_basis.T
    np.testing.assert_allclose(P @ params.identity_directions, params.identity_directions,
                               atol=1e-10)
    Ps = params.spatial_basis @ params.spatial_basis.T
    np.testing.assert_allclose(Ps @ params.spatial_map, params.spatial_map, atol=1e-10)


def test_calibrated_variance_shares():
    scenes = sample_scenes(1000, seed=0)
    p = em.make_emulator_params(identity_share=0.12, spatial_share=0.001, seed=0)
    H, X, ids, _ = em.stack_corpus(em.build_corpus_activations(scenes, p, seed=0), scenes)
    assert variance_subspace_fraction(H, p.identity_basis) == pytest.approx(0.12, rel=0.05)
    assert variance_subspace_fraction(H, p.spatial_basis) == pytest.approx(0.001, rel=0.1)


def test_full_patch_noiseless_equals_planted_latent(params):
    p = params.with_noise(0.0)
    s = sample_scenes(1, seed=3)[0]
    T, P = 4, 3
    cov = np.zeros((T, P, s.m))
    cov[:, 0, 1] = 1.0  # patch 0 fully owned by object 1; patch 1 empty
    cov[:, 2, 0] = 0.5
    patches, C = em.emulate_patch_activations(s, cov, p, np.random.default_rng(0), tau_slot=2)
    assert patches.shape == (2, P, p.d)
    want = p.offset + p.u_id([s.objects[1].identity])[0] + p.spatial_map @ s.coords[1]
    np.testing.assert_allclose(patches[:, 0], np.broadcast_to(want, (2, p.d)), atol=1e-12)
    np.testing.assert_allclose(patches[:, 1], np.broadcast_to(p.background, (2, p.d)),
                               atol=1e-12)
    half = 0.5 * p.object_mean([s.objects[0].identity], s.coords[:1])[0] + 0.5 * p.background
    np.testing.assert_allclose(patches[:, 2], np.broadcast_to(half, (2, p.d)), atol=1e-12)


def test_pool_single_full_patch():
    h = np.arange(6.0).reshape(1, 2, 3)  # 1 slot, 2 patches, d = 3
    C = np.array([[[1.0], [0.0]]])
    A = em.pool_object_tokens(h, C, kappa=0.25)
    np.testing.assert_array_equal(A.values[0], h[0, 0])
    assert A.valid.tolist() == [True]


def test_pool_two_patch_weighted_mean():
    rng = np.random.default_rng(0)
    h1, h2, h3 = rng.standard_normal((3, 5))
    h = np.stack([h1, h2, h3])[None]  # (1, 3, 5)
    C = np.array([[[0.5], [0.25], [0.1]]])  # third patch is below kappa
    A = em.pool_object_tokens(h, C, kappa=0.2)
    np.testing.assert_allclose(A.values[0], (0.5 * h1 + 0.25 * h2) / 0.75, rtol=1e-14)


def test_pool_averages_over_qualifying_slots():
    h = np.array([[[2.0]], [[4.0]], [[100.0]]])  # 3 slots, 1 patch, d = 1
    C = np.array([[[1.0]], [[0.5]], [[0.1]]])
    A = em.pool_object_tokens(h, C, kappa=0.3)
    assert A.values[0, 0] == pytest.approx(3.0)


def test_pool_kappa_above_all_coverage_flags_invalid():
    h = np.ones((1, 2, 3))
    C = np.array([[[0.3, 0.9], [0.2, 0.0]]])
    A = em.pool_object_tokens(h, C, kappa=0.95)
    assert A.valid.tolist() == [False, False]
    np.testing.assert_array_equal(A.values, 0.0)
    with pytest.raises(ValueError):
        em.pool_object_tokens(h, C, kappa=0.0)


def test_corpus_shapes_and_empty():
    scenes = sample_scenes(1000, seed=1)
    p = em.make_emulator_params(seed=1)
    corpus = em.build_corpus_activations(scenes, p, seed=1)
    assert len(corpus) == 1000
    assert all(3 <= A.m <= 8 and A.values.shape[1] == 256 for A in corpus.values())
    assert em.build_corpus_activations([], p) == {}
    H, X, ids, sidx = em.stack_corpus({}, [])
    assert H.shape[0] == X.shape[0] == 0


def test_corpus_is_deterministic_and_order_free():
    scenes = sample_scenes(20, seed=2)
    p = em.make_emulator_params(seed=2)
    a = em.build_corpus_activations(scenes, p, seed=5)
    b = em.build_corpus_activations(scenes[::-1], p, seed=5)
    for s in scenes:
        assert a[s.scene_id].values.tobytes() == b[s.scene_id].values.tobytes()
    c = em.build_corpus_activations(scenes, p, seed=6)
    assert not np.array_equal(a[scenes[0].scene_id].values, c[scenes[0].scene_id].values)


def test_rendered_mode_pools_coverage():
    scenes, trajs, _ = generate_corpus(3, seed=0, n_questions=0)
    p = em.make_emulator_params(seed=0, noise_sigma=0.0)
    corpus = em.build_corpus_activations(scenes, p, 0, "rendered", trajs, supersample=4)
    for s, t in zip(scenes, trajs):
        A = corpus[s.scene_id]
        assert A.values.shape == (s.m, p.d)
        cov = trajectory_coverage(s, t, (16, 16), 4).values
        slot = em.slot_coverage(cov, 2)
        assert A.valid.tolist() == (slot >= 0.25).any(1).any(0).tolist()
    with pytest.raises(ValueError):
        em.build_corpus_activations(scenes, p, mode="rendered")


def test_activation_matrix_round_trip(tmp_path, params):
    s = sample_scenes(1, seed=0)[0]
    A = em.emulate_object_activations(s, params, np.random.default_rng(0))
    A.save(tmp_path / "a.npz")
    B = em.ActivationMatrix.load(tmp_path / "a.npz")
    np.testing.assert_array_equal(A.values, B.values)
    assert B.scene_id == s.scene_id and B.object_names == s.names


def test_slot_coverage_validation():
    cov = np.ones((3, 2, 1))
    with pytest.raises(ValueError):
        em.slot_coverage(cov, 2)
    np.testing.assert_array_equal(em.slot_coverage(cov, 1), cov)


def test_dimension_too_small():
    with pytest.raises(ValueError):
        em.make_emulator_params(d=10)

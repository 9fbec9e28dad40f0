import numpy as np
import pytest

from grabmdm import ClusterGenSpec, ParameterError, SketchSpec, gen_clusters, haar_matrix, pairwise_sq_dists, sketch_view
from grabmdm.sketching import sketch_dataset


def test_haar_base_case_and_orthogonality():
    assert np.allclose(haar_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    for p in (1, 3, 4, 8, 100):
        H = haar_matrix(p)
        assert H.shape[0] >= p and H.shape[0] & (H.shape[0] - 1) == 0
        assert np.max(np.abs(H @ H.T - np.eye(H.shape[0]))) <= 1e-12
    coef = haar_matrix(8) @ np.full(8, 2.0)
    assert coef[0] == pytest.approx(2.0 * np.sqrt(8)) and np.allclose(coef[1:], 0)


def test_full_sketch_preserves_distances(rng):
    x = rng.normal(size=(10, 6))
    full = sketch_view(x, 8)
    assert np.max(np.abs(pairwise_sq_dists(full) - pairwise_sq_dists(x))) <= 1e-10
    with pytest.raises(ParameterError):
        sketch_view(x, 9)
    with pytest.raises(ParameterError):
        SketchSpec(0)


def test_single_coefficient_is_max_energy(rng):
    x = np.zeros((50, 8))
    x[:, 0] = 20 * rng.normal(size=50)
    x += 0.5 * rng.normal(size=x.shape)
    out, keep = sketch_view(x, 1, return_index=True)
    coef = x @ haar_matrix(8).T
    assert keep.tolist() == [int(np.argmax((coef**2).sum(axis=0)))]
    assert np.array_equal(out.points[:, 0], coef[:, keep[0]])


def test_contraction_and_energy_monotone(rng):
    x = rng.normal(size=(15, 12)) * np.linspace(3, 0.1, 12)
    d_full = pairwise_sq_dists(x)
    energies = []
    for s in range(1, 17):
        y = sketch_view(x, s).points
        assert np.all(pairwise_sq_dists(y) <= d_full + 1e-10)
        energies.append(float((y**2).sum()))
    assert np.all(np.diff(energies) >= -1e-10)


def test_sketched_clean_distances_close():
    # s = 12 keeps the coefficients of a 10-dimensional signal up to the Haar leakage
    lm = gen_clusters(ClusterGenSpec(n_per_cluster=30, noise_vars=(0, 0, 0), seed=2))
    for clean in lm.clean_views:
        d = pairwise_sq_dists(clean)
        ds = pairwise_sq_dists(sketch_view(clean, 12).points)
        iu = np.triu_indices_from(d, 1)
        rel = np.sqrt(np.mean((ds[iu] - d[iu]) ** 2) / np.mean(d[iu] ** 2))
        # with 16 >= 10 nonzero leading coordinates, at most 4 of the top-16 coarse coefficients are dropped
        assert rel < 0.5
        assert np.all(ds <= d + 1e-9)


def test_sketch_dataset_per_view_dims(rng):
    lm = gen_clusters(ClusterGenSpec(n_per_cluster=5, seed=0))
    out = sketch_dataset(lm.data, [4, 8, 12])
    assert [v.p for v in out] == [4, 8, 12]

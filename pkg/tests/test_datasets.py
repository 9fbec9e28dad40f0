import numpy as np
import pytest

from grabmdm import ClusterGenSpec, ManifoldGenSpec, ParameterError, gen_clusters, gen_manifolds, snr, spiked_view, zscore_normalize
from grabmdm.datasets import replication_seed, view_transforms
from grabmdm.kernels import MultiviewDataset


def test_uniform_box_view3_range():
    lm = gen_clusters(ClusterGenSpec(n_per_cluster=200, noise_vars=(0, 0, 0), seed=1))
    v3 = lm.clean_views[2][:200, :10]
    assert v3.min() >= 0.8 and v3.max() <= 2.4
    # zero padding beyond the signal block
    assert np.all(lm.clean_views[0][:, 10:] == 0)


def test_truncated_normal_support():
    lm = gen_clusters(ClusterGenSpec(setup="trunc_gaussian", n_per_cluster=300, seed=3))
    w = lm.clean_reference
    sd = np.sqrt(0.8)
    means = np.array([[3.0, 3.0, 2.0], [3.0, 5.0, 2.0], [2.0, 5.5, 2.0]])
    for j in range(3):
        for blk in range(3):
            x = w[j * 300:(j + 1) * 300, blk * 10:(blk + 1) * 10]
            assert np.all(np.abs(x - means[j, blk]) <= 3 * sd + 1e-12)
            assert abs(x.mean() - means[j, blk]) < 0.05


def test_zero_noise_hand_trace():
    spec = ClusterGenSpec(n_per_cluster=2, block_dim=1, p=(1, 1, 1), noise_vars=(0, 0, 0), seed=5)
    lm = gen_clusters(spec)
    w = lm.clean_reference
    g1, g2, g3 = view_transforms()
    v = [x.points[:, 0] for x in lm.data.views]
    assert np.allclose(v[0], w[:, 0] ** 2 + w[:, 0])
    assert np.allclose(v[1], 10 * np.log(w[:, 1] + 2))
    assert np.allclose(v[2], 0.8 * w[:, 2])
    assert lm.labels.tolist() == [0, 0, 1, 1, 2, 2]


def test_cluster_reproducible_and_balanced():
    a = gen_clusters(ClusterGenSpec(n_per_cluster=20, seed=9))
    b = gen_clusters(ClusterGenSpec(n_per_cluster=20, seed=9))
    c = gen_clusters(ClusterGenSpec(n_per_cluster=20, seed=10))
    for va, vb, vc in zip(a.data.views, b.data.views, c.data.views):
        assert np.array_equal(va.points, vb.points)
        assert not np.array_equal(va.points, vc.points)
    assert np.bincount(a.labels).tolist() == [20, 20, 20]
    assert replication_seed(0, 3) == replication_seed(0, 3) != replication_seed(0, 4)


def test_spec_validation():
    with pytest.raises(ParameterError):
        ClusterGenSpec(setup="rings")
    with pytest.raises(ParameterError):
        ClusterGenSpec(noise_vars=(1, -1, 0))
    with pytest.raises(ParameterError):
        ClusterGenSpec(p=(5, 100, 100))
    with pytest.raises(ParameterError):
        ManifoldGenSpec(setup="mixed_b", n=100)


def test_manifolds():
    lm = gen_manifolds(ManifoldGenSpec(n=90, noise_vars=(0, 0), seed=2))
    assert np.array_equal(lm.data.views[0].points, lm.data.views[1].points)
    s = lm.clean_reference
    r = np.hypot(s[:, 0], s[:, 2])
    assert r.min() >= 1.5 * np.pi - 1e-9 and r.max() <= 4.5 * np.pi + 1e-9
    assert s[:, 1].min() >= 0 and s[:, 1].max() <= 21

    mb = gen_manifolds(ManifoldGenSpec(setup="mixed_b", n=600, seed=2))
    assert np.bincount(mb.labels).tolist() == [200, 200, 200]
    s = mb.clean_reference
    assert np.allclose(np.linalg.norm(s[:200], axis=1), 1.0)
    assert np.all(np.linalg.norm(s[200:400] - [0, 1.5, 0], axis=1) <= 1 + 1e-9)
    assert np.all(np.linalg.norm(s[400:] - [1, 2.5, 0], axis=1) <= 1 + 1e-9)


def test_zscore_properties(rng):
    x = rng.normal(size=(40, 5)) * [1, 2, 3, 4, 5] + 7
    x[:, 3] = 2.5
    data = MultiviewDataset.from_arrays([x, rng.normal(size=(40, 2))])
    z, flags = zscore_normalize(data, return_flags=True)
    zp = z.views[0].points
    live = ~flags[0]
    assert flags[0].tolist() == [False, False, False, True, False]
    assert np.allclose(zp[:, live].mean(axis=0), 0) and np.allclose(zp[:, live].std(axis=0), 1)
    assert np.array_equal(zp[:, 3], x[:, 3])
    again = zscore_normalize(z)
    assert np.allclose(again.views[0].points, zp)
    shifted = MultiviewDataset.from_arrays([3.0 * x - 4.0, data.views[1].points])
    assert np.allclose(zscore_normalize(shifted).views[0].points[:, live], zp[:, live])


def test_snr(rng):
    clean = rng.normal(size=(100, 4))
    s = snr(clean, 0.5, p=10)
    assert snr(clean, 0.5, p=20) == pytest.approx(s / 2)
    assert snr(clean, 0.0) == float("inf")
    with pytest.raises(ParameterError):
        snr(clean, -1)
    c, noisy = spiked_view(20000, 50, (5, 3, 2), 0.1, seed=1)
    assert snr(c, 0.1, p=50) == pytest.approx(10 / (50 * 0.1), rel=0.03)
    assert np.allclose(noisy[:, 3:].var(axis=0).mean(), 0.1, rtol=0.02)

import json

import numpy as np
import pytest

import _loops
from grabmdm import (
    BandwidthReport,
    ClusterGenSpec,
    DegeneracyError,
    KernelSpec,
    MultiviewDataset,
    ParameterError,
    ShapeError,
    admissible_c,
    auto_embedding_dim,
    auto_percentile,
    default_c_grid,
    ecdf_quantile_scale,
    gen_clusters,
    pairwise_sq_dists,
    select_bandwidths,
    select_global_scale,
    spectral_distance,
    spiked_view,
)
from grabmdm.bandwidth import ecdf_quantile, parse_c_grid, spectral_distance_matrix


def test_ecdf_quantile_rule(rng):
    assert ecdf_quantile([1, 2, 3, 4], 0.5) == 2.0
    assert ecdf_quantile([4, 3, 2, 1], 0.51) == 3.0
    x = rng.normal(size=(9, 2))
    d2 = pairwise_sq_dists(x)
    vals = [d2[i, j] for i in range(9) for j in range(9) if i != j]
    for w in (0.1, 0.33, 0.5, 0.9):
        assert ecdf_quantile_scale(x, w) == _loops.quantile_inverted_cdf(vals, w)


def test_ecdf_quantile_degenerate_cases():
    simplex = np.eye(5)
    for w in (0.1, 0.5, 0.99):
        assert ecdf_quantile_scale(simplex, w) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(DegeneracyError):
        ecdf_quantile_scale(np.ones((4, 2)), 0.5)
    with pytest.raises(ParameterError):
        ecdf_quantile_scale(simplex, 1.0)


def test_spectral_distance():
    assert spectral_distance([1, 0.5], [1, 0.5], 2) == 0
    assert spectral_distance([1, 0.5], [1, 0.3], 2) == pytest.approx(0.04)
    assert spectral_distance([1, 0.5, 0.1], [1, 0.3, 0.0], 2) == spectral_distance([1, 0.3, 0.0], [1, 0.5, 0.1], 2)
    with pytest.raises(ShapeError):
        spectral_distance([1, 0.5], [1, 0.3], 3)
    S = np.array([[1, 0.5, 0.2], [1, 0.4, 0.1], [1, 0.1, 0.0]])
    D = spectral_distance_matrix(S, 3)
    assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)
    assert D[0, 2] == pytest.approx(_loops.spectral_distance(S[0], S[2], 3))


def test_grid_helpers():
    g = default_c_grid()
    assert g.size == 20 and g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(0.5)
    assert np.allclose(np.diff(np.log(g)), np.log(500) / 19)
    assert np.allclose(parse_c_grid("0.01:1:3"), [0.01, 0.1, 1.0])
    assert np.array_equal(parse_c_grid("0.3, 0.1"), [0.1, 0.3])
    mask = admissible_c(g, 600)
    assert np.all(g[mask] >= 1 / np.log(600)) and np.all(g[~mask] < 1 / np.log(600))


def _three_views(rng, n=12):
    z = rng.uniform(size=(n, 2))
    return MultiviewDataset.from_arrays([z + 0.05 * rng.normal(size=z.shape),
                                         np.c_[z, z[:, :1] ** 2] + 0.05 * rng.normal(size=(n, 3)),
                                         2 * z + 0.05 * rng.normal(size=z.shape)])


def test_select_single_candidate(rng):
    data = _three_views(rng)
    c, rep = select_global_scale(data, [1.0, 1.0, 1.0], [0.3], delta=1e-9)
    assert c == 0.3 and rep.alpha == 0


def test_select_identical_spectra_picks_last(rng):
    # bandwidths so small that every kernel is the identity: all spectra coincide
    data = _three_views(rng)
    grid = [1e-9, 2e-9, 3e-9, 4e-9]
    c, rep = select_global_scale(data, [1.0, 1.0, 1.0], grid, delta=1e-12)
    assert np.all(rep.S_sizes == len(grid) - 1)
    assert c == grid[-1]


def test_select_matches_straight_line_oracle(rng):
    data = _three_views(rng, n=7)
    grid = [0.05, 0.1, 0.2, 0.4, 0.8]
    pts = [v.points.tolist() for v in data]
    h = [_loops.quantile_inverted_cdf([_loops.sq_dist(p[i], p[j]) for i in range(7) for j in range(7) if i != j], 0.5)
         for p in pts]
    spectra = []
    for c in grid:
        kernels = [_loops.kernel_matrix(p, c * hl) for p, hl in zip(pts, h)]
        A = np.array(_loops.transition(_loops.block_affinity(kernels)))
        spectra.append(sorted(np.linalg.eigvals(A).real.tolist(), reverse=True))
    dists = [_loops.spectral_distance(spectra[i], spectra[j], 7) for i in range(5) for j in range(5) if i != j]
    delta = 0.05 * float(np.median(dists))
    alpha, sizes = _loops.select_c(spectra, 7, delta)
    rep = select_bandwidths(data, omega=0.5, c_grid=grid, min_kernel_mass=None)
    assert np.allclose(rep.h, h, rtol=0, atol=1e-12)
    assert rep.delta == pytest.approx(delta, rel=1e-8)
    assert rep.S_sizes.tolist() == sizes
    assert rep.c_star == grid[alpha]
    c_star, _ = select_global_scale(data, h, grid, delta=2.0, top_n=3)
    assert c_star == grid[_loops.select_c(spectra, 3, 2.0)[0]]


def test_select_validation(rng):
    data = _three_views(rng)
    with pytest.raises(ParameterError):
        select_global_scale(data, [1, 1, 1], [0.2, 0.1])
    with pytest.raises(ParameterError):
        select_global_scale(data, [1, 1, 1], [0.1, 0.2], delta=0.0)
    with pytest.raises(ParameterError):
        select_global_scale(data, [1, 1], [0.1])


def test_report_invariants_and_json(rng, tmp_path):
    data = _three_views(rng)
    rep = select_bandwidths(data, omega=[0.3, 0.5, 0.7], c_grid=default_c_grid(0.01, 1.0, 6), min_kernel_mass=None)
    assert np.array_equal(rep.epsilon, rep.c_star * rep.h)
    assert rep.c_star in rep.c_grid
    assert np.array_equal(rep.spectral_dist, rep.spectral_dist.T)
    assert np.all(np.diag(rep.spectral_dist) == 0)
    text = rep.to_json(tmp_path / "r.json")

    clone = BandwidthReport.from_dict(json.loads(text))
    assert np.array_equal(clone.spectral_dist, rep.spectral_dist) and clone.c_star == rep.c_star
    again = select_bandwidths(data, omega=[0.3, 0.5, 0.7], c_grid=default_c_grid(0.01, 1.0, 6), min_kernel_mass=None)
    assert again.to_json() == text


def test_fixed_grid_composition(rng):
    data = _three_views(rng)
    rep = select_bandwidths(data, omega=0.5, c_grid=[0.1], min_kernel_mass=None)
    for v, eps in zip(data, rep.epsilon):
        d2 = pairwise_sq_dists(v)
        med = _loops.quantile_inverted_cdf(d2[np.triu_indices(v.n, 1)].tolist(), 0.5)
        assert eps == 0.1 * med


def test_admissible_filter_drops_identity_plateau(rng):
    data = _three_views(rng, n=30)
    grid = default_c_grid()
    rep = select_bandwidths(data, c_grid=grid)
    keep = admissible_c(grid, 30)
    assert np.array_equal(rep.c_grid, grid[keep]) and np.array_equal(rep.c_excluded, grid[~keep])
    with pytest.warns(RuntimeWarning):
        rep = select_bandwidths(data, c_grid=[1e-4, 2e-4])
    assert rep.c_star == 2e-4


def test_epsilon_follows_signal_energy():
    lm = gen_clusters(ClusterGenSpec(n_per_cluster=60, seed=3))
    energy = [np.trace(np.cov(c.T)) for c in lm.clean_views]
    rep = select_bandwidths(lm.data, c_grid=default_c_grid(num=6))
    assert np.array_equal(np.argsort(rep.epsilon), np.argsort(energy))


def test_plateau_entries_below_delta():
    lm = gen_clusters(ClusterGenSpec(n_per_cluster=40, noise_vars=(0, 0, 0), seed=1))
    rep = select_bandwidths(lm.data)
    members = np.flatnonzero(rep.spectral_dist[rep.alpha] < rep.delta)
    assert np.all(rep.spectral_dist[rep.alpha, members] < rep.delta)
    assert members.size - 1 == rep.S_sizes[rep.alpha]


def test_h_tracks_clean_quantile():
    # h converges to the quantile of the clean squared distances as the noise vanishes
    spikes, p, n = (4.0, 3.0, 2.0, 1.0), 200, 200
    for w in (0.1, 0.5, 0.9):
        errs = []
        for sigma2 in (1.0, 0.1, 0.01, 0.001):
            clean, noisy = spiked_view(n, p, spikes, sigma2 / p, seed=5)
            errs.append(abs(ecdf_quantile_scale(noisy, w) / ecdf_quantile_scale(clean, w) - 1))
        # monotone until the error reaches the sampling floor
        assert errs[0] > errs[1] > errs[2]
        assert max(errs[2:]) < 0.01


def test_auto_embedding_dim_examples():
    tail = np.linspace(0.28, 0.1, 14)
    eta = np.r_[1.0, 0.9, 0.3, 0.29, tail[1:]]
    m, rep = auto_embedding_dim(eta)
    assert rep.e_threshold == pytest.approx(1.0)
    assert m == 1 == _loops.first_gap_m(eta.tolist(), int(np.sqrt(eta.size)))
    flat = 0.9 ** np.arange(25)
    assert auto_embedding_dim(flat)[0] == 1
    eta = np.r_[1.0, 0.95, 0.9, 0.85, 0.3, 0.28, np.linspace(0.27, 0.01, 30)]
    assert auto_embedding_dim(eta)[0] == 3 == _loops.first_gap_m(eta.tolist(), int(np.sqrt(eta.size)))


def test_auto_embedding_dim_fallback():
    with pytest.warns(RuntimeWarning):
        m, rep = auto_embedding_dim(np.array([1.0, 0.5, -0.2, -0.5, -0.9, -1.0, -1.0, -1.0, -1.0]))
    assert m == 1 and rep.fallback


def test_auto_percentile_rules(rng):
    x = np.r_[rng.normal(size=(20, 2)), rng.normal(size=(20, 2)) + 8]
    assert auto_percentile(x, [0.3])[0] == 0.3
    w, counts = auto_percentile(x, [0.25, 0.5, 0.75])
    best = max(counts.values())
    assert w == max(c for c in counts if counts[c] == best)
    # straight-line oracle of the rule
    d2 = pairwise_sq_dists(x)
    vals = [d2[i, j] for i in range(40) for j in range(40) if i != j]
    ref = {}
    for cand in (0.25, 0.5, 0.75):
        h = _loops.quantile_inverted_cdf(vals, cand)
        eigs = np.sort(np.linalg.eigvalsh(np.exp(-d2 / h)))[::-1]
        ratios = []
        for i in range(1, int(np.sqrt(40)) + 1):
            if eigs[i - 1] <= 0 or eigs[i] <= 0:
                break
            ratios.append(eigs[i - 1] / eigs[i])
        s = 0.5 * (max(ratios) - 1)
        ks = [i + 1 for i, r in enumerate(ratios) if r >= 1 + s]
        ref[cand] = max(ks) if ks else 0
    assert counts == ref
    with pytest.raises(ParameterError):
        auto_percentile(x, [])


def test_auto_percentile_tie_goes_to_largest(monkeypatch, rng):
    import grabmdm.bandwidth as bw

    monkeypatch.setattr(bw, "_signal_count", lambda eigs, s: (2, np.ones(1)))
    assert bw.auto_percentile(rng.normal(size=(10, 2)), [0.2, 0.7, 0.4])[0] == 0.7


def test_select_bandwidths_auto_omega(rng):
    data = _three_views(rng, n=20)
    rep = select_bandwidths(data, omega="auto", c_grid=[0.2, 0.5])
    assert rep.omega.shape == (3,) and np.all((rep.omega > 0) & (rep.omega < 1))
    with pytest.raises(ParameterError):
        select_bandwidths(data, omega="sometimes")


def test_polynomial_kernel_selection(rng):
    data = _three_views(rng)
    rep = select_bandwidths(data, kernel=KernelSpec("polynomial_decay", beta=3.0), c_grid=[0.1, 0.5, 1.0])
    assert rep.kernel == "polynomial_decay"

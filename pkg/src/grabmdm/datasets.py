"""Synthetic multiview benchmarks: three-cluster mixtures and noisy manifolds.

Every generator is a pure function of its spec. Randomness is split into
independent streams (latent draw, then one stream per view) keyed on the
seed, so adding a view never changes the draws of earlier views.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from ._errors import GenerationError, ParameterError
from .kernels import MultiviewDataset

__all__ = [
    "ClusterGenSpec",
    "ManifoldGenSpec",
    "LabeledMultiview",
    "gen_clusters",
    "gen_manifolds",
    "zscore_normalize",
    "snr",
    "spiked_view",
    "view_transforms",
    "stream",
    "replication_seed",
    "SWISS_ROLL_T",
    "SWISS_ROLL_H",
    "S_CURVE_T",
    "S_CURVE_H",
]

SWISS_ROLL_T = (1.5 * np.pi, 4.5 * np.pi)
SWISS_ROLL_H = (0.0, 21.0)
S_CURVE_T = (-1.5 * np.pi, 1.5 * np.pi)
S_CURVE_H = (0.0, 2.0)

# uniform boxes, rows = cluster, columns = latent block; each entry (a, b)
_BOX_BOUNDS = np.array([
    [(2.5, 3.5), (1.0, 5.0), (1.0, 3.0)],
    [(2.5, 3.5), (2.0, 6.0), (1.0, 3.0)],
    [(1.5, 2.5), (3.0, 7.0), (-1.0, 3.0)],
])
_TRUNC_MEANS = np.array([
    [3.0, 3.0, 2.0],
    [3.0, 5.0, 2.0],
    [2.0, 5.5, 2.0],
])
_TRUNC_VAR = 0.8


def view_transforms():
    """The three entrywise maps turning latent blocks into view signals."""
    return (
        lambda x: x ** 2 + x,
        lambda x: 10.0 * np.log(x + 2.0),
        lambda x: 0.8 * x,
    )


def stream(seed: int, key: int) -> np.random.Generator:
    """Independent generator for sub-stream ``key`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(key),)))


def replication_seed(master_seed: int, rep: int) -> int:
    """Stable 63-bit seed of replication ``rep``."""
    state = np.random.SeedSequence([int(master_seed), int(rep)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


@dataclass(frozen=True)
class ClusterGenSpec:
    setup: str = "uniform_boxes"
    n_per_cluster: int = 200
    block_dim: int = 10
    p: tuple = (100, 100, 100)
    noise_vars: tuple = (0.3, 0.1, 0.3)
    seed: int = 0

    def __post_init__(self):
        if self.setup not in ("uniform_boxes", "trunc_gaussian"):
            raise ParameterError(f"unknown cluster setup {self.setup!r}")
        if self.n_per_cluster < 1 or self.block_dim < 1:
            raise ParameterError("n_per_cluster and block_dim must be positive")
        p = tuple(int(x) for x in np.broadcast_to(self.p, (3,)))
        if any(q < self.block_dim for q in p):
            raise ParameterError(f"ambient dims {p} smaller than block_dim {self.block_dim}")
        nv = tuple(float(v) for v in self.noise_vars)
        if len(nv) != 3 or any(v < 0 for v in nv):
            raise ParameterError(f"need three nonnegative noise variances, got {nv}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "noise_vars", nv)

    @property
    def n(self) -> int:
        return 3 * self.n_per_cluster

    @property
    def latent_dim(self) -> int:
        return 3 * self.block_dim


@dataclass(frozen=True)
class ManifoldGenSpec:
    setup: str = "swiss_roll_a"
    n: int = 600
    p: int = 100
    noise_vars: tuple = (0.05, 0.2)
    seed: int = 0

    def __post_init__(self):
        if self.setup not in ("swiss_roll_a", "mixed_b"):
            raise ParameterError(f"unknown manifold setup {self.setup!r}")
        if self.setup == "mixed_b" and self.n % 3:
            raise ParameterError(f"mixed_b needs n divisible by 3, got {self.n}")
        if self.n < 2 or self.p < 3:
            raise ParameterError("need n >= 2 and p >= 3")
        nv = tuple(float(v) for v in self.noise_vars)
        if len(nv) != 2 or any(v < 0 for v in nv):
            raise ParameterError(f"need two nonnegative noise variances, got {nv}")
        object.__setattr__(self, "noise_vars", nv)


@dataclass
class LabeledMultiview:
    """Noisy views plus everything needed to score an embedding of them."""

    data: MultiviewDataset
    labels: np.ndarray
    clean_reference: np.ndarray
    clean_views: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


def _pad_and_noise(signal: np.ndarray, p: int, var: float, rng: np.random.Generator):
    n, d = signal.shape
    clean = np.zeros((n, p))
    clean[:, :d] = signal
    noise = rng.standard_normal((n, p)) * np.sqrt(var)
    return clean, clean + noise


def _draw_latent(spec: ClusterGenSpec, rng: np.random.Generator) -> np.ndarray:
    nn, bd = spec.n_per_cluster, spec.block_dim
    w = np.empty((spec.n, 3 * bd))
    for j in range(3):
        rows = slice(j * nn, (j + 1) * nn)
        for blk in range(3):
            cols = slice(blk * bd, (blk + 1) * bd)
            if spec.setup == "uniform_boxes":
                a, b = _BOX_BOUNDS[j, blk]
                w[rows, cols] = rng.uniform(a, b, size=(nn, bd))
            else:
                mu, sd = _TRUNC_MEANS[j, blk], np.sqrt(_TRUNC_VAR)
                w[rows, cols] = stats.truncnorm.rvs(-3.0, 3.0, loc=mu, scale=sd,
                                                    size=(nn, bd), random_state=rng)
    return w


def gen_clusters(spec: ClusterGenSpec) -> LabeledMultiview:
    """Three clusters observed through three nonlinear, zero-padded, noisy views.

    Latent rows ``w_i`` (cluster ``j`` for ``i`` in the ``j``-th block of
    ``n_per_cluster`` rows) are split into three blocks; block ``l`` goes
    through the ``l``-th view transform, is zero-padded to ``p_l`` and gets
    isotropic Gaussian noise of variance ``noise_vars[l]``.
    """
    w = _draw_latent(spec, stream(spec.seed, 0))
    bd = spec.block_dim
    if np.any(w[:, bd:2 * bd] <= -2.0):
        raise GenerationError("log transform of view 2 needs latent coordinates > -2")
    clean_views, noisy = [], []
    for ell, g in enumerate(view_transforms()):
        sig = g(w[:, ell * bd:(ell + 1) * bd])
        clean, obs = _pad_and_noise(sig, spec.p[ell], spec.noise_vars[ell], stream(spec.seed, ell + 1))
        clean_views.append(clean)
        noisy.append(obs)
    labels = np.repeat(np.arange(3), spec.n_per_cluster)
    return LabeledMultiview(MultiviewDataset.from_arrays(noisy), labels, w, clean_views,
                            {"generator": "gen_clusters", **asdict(spec)})


def _area_uniform_t(rng, n, lo, hi):
    # arc-length density of the spiral (t cos t, t sin t) is sqrt(1 + t^2)
    out = np.empty(0)
    bound = np.sqrt(1.0 + hi * hi)
    while out.size < n:
        t = rng.uniform(lo, hi, size=2 * (n - out.size) + 16)
        keep = rng.uniform(0.0, bound, size=t.size) < np.sqrt(1.0 + t * t)
        out = np.concatenate([out, t[keep]])
    return out[:n]


def _swiss_roll(rng, n):
    t = _area_uniform_t(rng, n, *SWISS_ROLL_T)
    h = rng.uniform(*SWISS_ROLL_H, size=n)
    return np.column_stack([t * np.cos(t), h, t * np.sin(t)])


def _s_curve(rng, n):
    t = rng.uniform(*S_CURVE_T, size=n)
    h = rng.uniform(*S_CURVE_H, size=n)
    return np.column_stack([np.sin(t), h, np.sign(t) * (np.cos(t) - 1.0)])


def _unit_sphere(rng, n):
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _unit_ball_affine(kind):
    """Centre and radius that map a parameter-domain surface into the unit ball."""
    if kind == "swiss":
        t = np.linspace(*SWISS_ROLL_T, 2001)
        pts = np.column_stack([t * np.cos(t), np.zeros_like(t), t * np.sin(t)])
        hs = SWISS_ROLL_H
    else:
        t = np.linspace(*S_CURVE_T, 2001)
        pts = np.column_stack([np.sin(t), np.zeros_like(t), np.sign(t) * (np.cos(t) - 1.0)])
        hs = S_CURVE_H
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    lo[1], hi[1] = hs
    centre = 0.5 * (lo + hi)
    corners = np.vstack([pts + [0, hs[0], 0], pts + [0, hs[1], 0]]) - centre
    return centre, float(np.max(np.linalg.norm(corners, axis=1)))


def gen_manifolds(spec: ManifoldGenSpec) -> LabeledMultiview:
    """Two noisy views of one clean 3-D sample set embedded in ``R^p``.

    ``swiss_roll_a`` samples the classic Swiss roll uniformly in area.
    ``mixed_b`` stacks a unit sphere at the origin, an S-curve at
    ``(0, 1.5, 0)`` and a Swiss roll at ``(1, 2.5, 0)``, the latter two
    rescaled into a unit ball, with ``n / 3`` samples each.
    """
    rng = stream(spec.seed, 0)
    if spec.setup == "swiss_roll_a":
        s = _swiss_roll(rng, spec.n)
        labels = np.zeros(spec.n, dtype=int)
    else:
        k = spec.n // 3
        sphere = _unit_sphere(rng, k)
        c_s, r_s = _unit_ball_affine("s_curve")
        scurve = (_s_curve(rng, k) - c_s) / r_s + np.array([0.0, 1.5, 0.0])
        c_r, r_r = _unit_ball_affine("swiss")
        roll = (_swiss_roll(rng, k) - c_r) / r_r + np.array([1.0, 2.5, 0.0])
        s = np.vstack([sphere, scurve, roll])
        labels = np.repeat(np.arange(3), k)
    clean_views, noisy = [], []
    for ell in range(2):
        clean, obs = _pad_and_noise(s, spec.p, spec.noise_vars[ell], stream(spec.seed, ell + 1))
        clean_views.append(clean)
        noisy.append(obs)
    manifest = {"generator": "gen_manifolds", **asdict(spec),
                "swiss_roll_t": SWISS_ROLL_T, "swiss_roll_h": SWISS_ROLL_H,
                "s_curve_t": S_CURVE_T, "s_curve_h": S_CURVE_H}
    return LabeledMultiview(MultiviewDataset.from_arrays(noisy), labels, s, clean_views, manifest)


def zscore_normalize(data: MultiviewDataset, return_flags: bool = False):
    """Standardize every coordinate of every view to zero mean, unit variance.

    Constant coordinates are left untouched. With ``return_flags`` the
    per-view boolean masks of such coordinates are returned as well.
    """
    out, flags = [], []
    for v in data.views:
        x = v.points
        mu = x.mean(axis=0)
        sd = x.std(axis=0)
        const = sd <= 1e-12 * np.maximum(1.0, np.abs(mu))
        z = x.copy()
        z[:, ~const] = (x[:, ~const] - mu[~const]) / sd[~const]
        out.append(z)
        flags.append(const)
    result = MultiviewDataset.from_arrays(out)
    return (result, flags) if return_flags else result


def snr(clean_signal: np.ndarray, noise_var: float, p: int | None = None) -> float:
    """Signal energy (trace of the clean sample covariance) over ``p * sigma^2``."""
    x = np.asarray(clean_signal, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    p = x.shape[1] if p is None else int(p)
    if noise_var < 0:
        raise ParameterError("noise variance must be nonnegative")
    energy = float(np.sum(np.var(x, axis=0, ddof=1)))
    if noise_var == 0:
        return float("inf")
    return energy / (p * noise_var)


def spiked_view(n: int, p: int, spikes, noise_var: float, seed: int = 0):
    """Gaussian spiked-covariance sample: ``diag(spikes + s2, s2, ..., s2)``.

    Returns ``(clean, noisy)``; the clean part lives in the first
    ``len(spikes)`` coordinates with variances ``spikes``.
    """
    spikes = np.asarray(spikes, dtype=float)
    r = spikes.size
    if r > p:
        raise ParameterError("more spikes than ambient dimensions")
    rng = stream(seed, 0)
    clean = np.zeros((n, p))
    clean[:, :r] = rng.standard_normal((n, r)) * np.sqrt(spikes)
    noisy = clean + stream(seed, 1).standard_normal((n, p)) * np.sqrt(noise_var)
    return clean, noisy

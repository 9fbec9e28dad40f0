"""Replicated benchmarks on the synthetic setups, plus CSV/JSON emitters.

A benchmark run is fully described by an :class:`ExperimentConfig`. Each
replication derives its seed from ``master_seed`` and its index, so results
do not depend on the worker count or on evaluation order.
"""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ._errors import GrabMDMError, ParameterError
from .bandwidth import auto_embedding_dim, parse_c_grid, select_bandwidths
from .datasets import (
    ClusterGenSpec,
    ManifoldGenSpec,
    gen_clusters,
    gen_manifolds,
    replication_seed,
    zscore_normalize,
)
from .embedding import EmbeddingSet, TransitionSpectrum, build_Q, decompose, embedding_matrix
from .kernels import KernelSpec, MultiviewDataset, block_affinity, view_kernels
from .metrics import clustering_accuracy, kmeans, rand_index, trustworthiness
from .sketching import sketch_dataset

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "PipelineOutput",
    "run_pipeline",
    "run_cluster_bench",
    "run_manifold_bench",
    "run_bench",
    "emit_table",
    "emit_scree",
    "write_outputs",
    "load_config",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_NUMERIC",
]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

CLUSTER_SETUPS = ("uniform_boxes", "trunc_gaussian")
MANIFOLD_SETUPS = ("swiss_roll_a", "mixed_b")


@dataclass
class ExperimentConfig:
    """Resolved settings of one benchmark scenario.

    ``m`` is an int or ``"auto"``; ``omega`` a float, a per-view list or
    ``"auto"``; ``c_grid`` a ``"lo:hi:N"`` string or an explicit list;
    ``sketch`` ``None``, one target dimension, or one per view.
    """

    kind: str = "cluster"
    setup: str = "uniform_boxes"
    noise_vars: tuple = (0.3, 0.1, 0.3)
    replications: int = 100
    master_seed: int = 0
    n_per_cluster: int = 200
    n: int = 600
    p: int = 100
    normalize: bool = True
    sketch: object = None
    omega: object = 0.5
    c_grid: object = "0.001:0.5:20"
    delta: float | None = None
    min_kernel_mass: float | None = 1.0
    kernel: str = "gaussian"
    beta: float = 2.0
    m: object = None
    t: float = 1.0
    mode: str = "averaged"
    n_clusters: int = 3
    kmeans_restarts: int = 20
    trust_k: int = 5
    failure_budget: float = 0.01
    workers: int = 1

    def __post_init__(self):
        self.noise_vars = tuple(float(v) for v in self.noise_vars)
        if self.kind not in ("cluster", "manifold"):
            raise ParameterError(f"kind must be 'cluster' or 'manifold', got {self.kind!r}")
        allowed = CLUSTER_SETUPS if self.kind == "cluster" else MANIFOLD_SETUPS
        if self.setup not in allowed:
            raise ParameterError(f"setup {self.setup!r} is not a {self.kind} setup {allowed}")
        if self.m is None:
            self.m = 1 if self.kind == "cluster" else 3
        if not (self.m == "auto" or (isinstance(self.m, (int, np.integer)) and self.m >= 1)):
            raise ParameterError(f"m must be a positive int or 'auto', got {self.m!r}")
        if self.mode not in ("averaged", "joint"):
            raise ParameterError(f"mode must be 'averaged' or 'joint', got {self.mode!r}")
        if self.replications < 1 or self.workers < 1:
            raise ParameterError("replications and workers must be >= 1")
        if not 0 <= self.failure_budget <= 1:
            raise ParameterError("failure_budget must lie in [0, 1]")
        if self.delta is not None and not self.delta > 0:
            raise ParameterError(f"delta must be positive, got {self.delta}")
        if self.min_kernel_mass is not None and not self.min_kernel_mass > 0:
            raise ParameterError(f"min_kernel_mass must be positive, got {self.min_kernel_mass}")
        if isinstance(self.omega, str) and self.omega != "auto":
            raise ParameterError(f"omega must be numeric or 'auto', got {self.omega!r}")
        if isinstance(self.omega, list):
            self.omega = tuple(self.omega)
        if isinstance(self.sketch, list):
            self.sketch = tuple(self.sketch)
        self.grid()  # validate early

    def grid(self) -> np.ndarray:
        if isinstance(self.c_grid, str):
            g = parse_c_grid(self.c_grid)
        else:
            g = np.asarray(self.c_grid, dtype=float).ravel()
        if g.size < 1 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ParameterError("c_grid must be strictly ascending and positive")
        return g

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.kernel, beta=self.beta)

    def label(self) -> str:
        return f"{self.setup} ({','.join(f'{v:g}' for v in self.noise_vars)})"

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, tuple):
                out[key] = list(val)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path) -> dict:
    """Read a JSON object or ``key = value`` lines (values parsed as JSON when possible)."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON ({exc})") from exc
        return obj
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = _parse_value(val)
    return out


@dataclass
class PipelineOutput:
    data: MultiviewDataset
    report: object
    spectrum: TransitionSpectrum
    m: int
    tuning: object
    E: EmbeddingSet
    embedding: np.ndarray  # (n, m) averaged or (n, K m) joint


def run_pipeline(data: MultiviewDataset, cfg: ExperimentConfig) -> PipelineOutput:
    """normalize -> sketch -> select bandwidths -> decompose -> choose m -> embed."""
    if cfg.normalize:
        data = zscore_normalize(data)
    if cfg.sketch is not None:
        data = sketch_dataset(data, cfg.sketch)
    spec = cfg.kernel_spec()
    omega = cfg.omega if isinstance(cfg.omega, str) else np.asarray(cfg.omega, dtype=float)
    report = select_bandwidths(data, omega=omega, c_grid=cfg.grid(), delta=cfg.delta, kernel=spec,
                               min_kernel_mass=cfg.min_kernel_mass)
    kernels = view_kernels(data, spec, epsilons=report.epsilon)
    spectrum = decompose(block_affinity(kernels))
    tuning = None
    if cfg.m == "auto":
        m, tuning = auto_embedding_dim(spectrum)
    else:
        m = int(cfg.m)
    E = build_Q(spectrum, m, cfg.t)
    return PipelineOutput(data, report, spectrum, m, tuning, E, embedding_matrix(E, cfg.mode))


def _generate(cfg: ExperimentConfig, seed: int):
    if cfg.kind == "cluster":
        K = len(cfg.noise_vars)
        return gen_clusters(ClusterGenSpec(setup=cfg.setup, n_per_cluster=cfg.n_per_cluster,
                                           p=(cfg.p,) * K, noise_vars=cfg.noise_vars, seed=seed))
    return gen_manifolds(ManifoldGenSpec(setup=cfg.setup, n=cfg.n, p=cfg.p,
                                         noise_vars=cfg.noise_vars, seed=seed))


def _replicate(args) -> dict:
    cfg, rep = args
    seed = replication_seed(cfg.master_seed, rep)
    row = {"rep": rep, "seed": seed, "status": "ok", "error": ""}
    try:
        lm = _generate(cfg, seed)
        out = run_pipeline(lm.data, cfg)
        row["c_star"] = out.report.c_star
        row["m"] = out.m
        if cfg.kind == "cluster":
            labels = kmeans(out.embedding, cfg.n_clusters, cfg.kmeans_restarts, seed=seed).assignments
            row["acc"] = clustering_accuracy(labels, lm.labels)
            row["rand"] = rand_index(labels, lm.labels)
        else:
            row["trust"] = trustworthiness(out.embedding, lm.clean_reference, cfg.trust_k)
    except (GrabMDMError, np.linalg.LinAlgError, FloatingPointError) as exc:
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


@dataclass
class ExperimentResult:
    """Per-replication rows and their aggregates (sample std, ``ddof=1``)."""

    config: ExperimentConfig
    rows: list
    metrics: tuple
    summary: dict = field(default_factory=dict)
    n_failed: int = 0
    elapsed: float = 0.0

    @property
    def failure_rate(self) -> float:
        return self.n_failed / len(self.rows) if self.rows else 0.0

    @property
    def exceeded_budget(self) -> bool:
        return self.failure_rate > self.config.failure_budget

    def values(self, metric: str) -> np.ndarray:
        return np.array([r[metric] for r in self.rows if r["status"] == "ok"], dtype=float)

    def mean(self, metric: str) -> float:
        return self.summary[metric][0]


def _aggregate(rows, metrics) -> dict:
    out = {}
    for name in metrics:
        vals = np.array([r[name] for r in rows if r["status"] == "ok"], dtype=float)
        if vals.size == 0:
            out[name] = (float("nan"), float("nan"))
        else:
            std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out[name] = (float(vals.mean()), std)
    return out


def run_bench(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    """Run ``cfg.replications`` replications and aggregate them."""
    metrics = ("acc", "rand") if cfg.kind == "cluster" else ("trust",)
    tasks = [(cfg, rep) for rep in range(cfg.replications)]
    start = time.perf_counter()
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_replicate, tasks))
    else:
        rows = []
        for task in tasks:
            rows.append(_replicate(task))
            if progress is not None:
                progress(rows[-1])
    rows.sort(key=lambda r: r["rep"])
    n_failed = sum(r["status"] != "ok" for r in rows)
    return ExperimentResult(cfg, rows, metrics, _aggregate(rows, metrics), n_failed,
                            time.perf_counter() - start)


def run_cluster_bench(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    if cfg.kind != "cluster":
        raise ParameterError("run_cluster_bench needs kind='cluster'")
    return run_bench(cfg, progress)


def run_manifold_bench(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    if cfg.kind != "manifold":
        raise ParameterError("run_manifold_bench needs kind='manifold'")
    return run_bench(cfg, progress)


def emit_table(results, path=None):
    """One row per scenario, ``mean``/``std`` columns per metric.

    Returns ``(csv_text, text_table)``. The CSV keeps full precision; the
    text table formats each cell as ``"%.2f (%.2f)"``. When ``path`` is
    given the CSV is written there and the text table next to it with a
    ``.txt`` suffix.
    """
    if isinstance(results, ExperimentResult):
        results = [results]
    metrics = []
    for res in results:
        metrics.extend(m for m in res.metrics if m not in metrics)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario", "replications", "failed"]
                    + [f"{m}_{s}" for m in metrics for s in ("mean", "std")])
    lines = []
    width = max([len("scenario")] + [len(r.config.label()) for r in results])
    lines.append("  ".join(["scenario".ljust(width)] + [m.rjust(11) for m in metrics]))
    for res in results:
        cells = [res.config.label(), len(res.rows), res.n_failed]
        text = [res.config.label().ljust(width)]
        for m in metrics:
            mean, std = res.summary.get(m, (float("nan"), float("nan")))
            cells += [repr(mean), repr(std)]
            text.append(("%.2f (%.2f)" % (mean, std)).rjust(11) if m in res.summary else "".rjust(11))
        writer.writerow(cells)
        lines.append("  ".join(text))
    csv_text, table = buf.getvalue(), "\n".join(lines) + "\n"
    if path is not None:
        path = Path(path)
        path.write_text(csv_text, encoding="utf-8")
        path.with_suffix(".txt").write_text(table, encoding="utf-8")
    return csv_text, table


def emit_scree(spectrum: TransitionSpectrum, path):
    """Write the eigen-ratio table and the second eigenvector.

    ``path`` receives ``index, eigenvalue, ratio`` with
    ``ratio_i = eta_i / eta_{i+1}`` (empty on the last row).
    ``<stem>_u2.csv`` receives one row per entry of ``u_2``: its
    position, view id, sample index, value, and the average of ``u_2``
    over the views at that sample.
    """
    path = Path(path)
    eta = np.asarray(spectrum.eigenvalues, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue", "ratio"])
    for i, val in enumerate(eta):
        if i + 1 < eta.size and eta[i + 1] != 0:
            ratio = repr(float(val / eta[i + 1]))
        else:
            ratio = ""
        w.writerow([i + 1, repr(float(val)), ratio])
    path.write_text(buf.getvalue(), encoding="utf-8")

    n, K = spectrum.n, spectrum.K
    u2 = np.asarray(spectrum.right_eigenvectors[:, 1], dtype=float)
    avg = u2.reshape(K, n).mean(axis=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["position", "view", "sample", "u2", "view_average"])
    for pos in range(n * K):
        view, sample = divmod(pos, n)
        w.writerow([pos + 1, view + 1, sample + 1, repr(float(u2[pos])), repr(float(avg[sample]))])
    vec_path = path.with_name(path.stem + "_u2.csv")
    vec_path.write_text(buf.getvalue(), encoding="utf-8")
    return path, vec_path


def _manifest(cfg: ExperimentConfig, extra: dict | None = None) -> dict:
    from . import __version__

    man = {"package": "grabmdm", "version": __version__, "numpy": np.__version__,
           "config": cfg.to_dict()}
    man.update(extra or {})
    return man


def write_outputs(result: ExperimentResult, outdir) -> dict:
    """Write ``replications.csv``, ``summary.csv``/``.txt`` and ``manifest.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cols = ["rep", "seed", "status", "c_star", "m", *result.metrics, "error"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in result.rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    paths = {"replications": outdir / "replications.csv", "summary": outdir / "summary.csv",
             "manifest": outdir / "manifest.json"}
    paths["replications"].write_text(buf.getvalue(), encoding="utf-8")
    emit_table([result], paths["summary"])
    extra = {"summary": {k: list(v) for k, v in result.summary.items()},
             "failed": result.n_failed, "failure_rate": result.failure_rate}
    paths["manifest"].write_text(json.dumps(_manifest(result.config, extra), indent=2) + "\n",
                                 encoding="utf-8")
    return paths

"""Command-line entry point: ``grabmdm <subcommand> ...``.

Every subcommand accepts ``--config FILE`` (JSON object or ``key = value``
lines, keys as in :class:`~grabmdm.experiments.ExperimentConfig`); explicit
flags override the file. Runs that write a directory also write
``manifest.json`` echoing the resolved configuration.

Exit codes: 0 success, 2 configuration error, 3 numeric failures above the
failure budget.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from ._errors import GrabMDMError, ParameterError
from .bandwidth import parse_c_grid
from .datasets import ClusterGenSpec, ManifoldGenSpec, gen_clusters, gen_manifolds
from .experiments import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    ExperimentConfig,
    _manifest,
    emit_scree,
    load_config,
    run_bench,
    run_pipeline,
    write_outputs,
)
from .embedding import save_embedding_csv
from .kernels import load_views, save_views
from .oracles import bias_slope_test, robustness_sweep


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _omega(text: str):
    if text == "auto":
        return "auto"
    vals = _floats(text)
    return vals[0] if len(vals) == 1 else vals


def _c_grid(text: str):
    parse_c_grid(text)  # fail early
    return text if ":" in text else _floats(text)


def _sketch(text: str):
    if text.lower() == "none":
        return None
    vals = [int(x) for x in text.split(",") if x.strip()]
    return vals[0] if len(vals) == 1 else vals


def _optional_float(text: str):
    return None if text.lower() == "none" else float(text)


def _m(text: str):
    return "auto" if text == "auto" else int(text)


def _add_pipeline_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", type=Path, help="JSON or key = value config file")
    g.add_argument("--omega", type=_omega, help="'auto' or percentile(s) v1,v2,...")
    g.add_argument("--c-grid", dest="c_grid", type=_c_grid, help="lo:hi:N (log-spaced) or c1,c2,...")
    g.add_argument("--delta", type=_optional_float, help="plateau threshold, or 'none' for the default")
    g.add_argument("--min-kernel-mass", dest="min_kernel_mass", type=_optional_float,
                   help="drop grid values with n K(1/c) below this; 'none' keeps all")
    g.add_argument("--sketch", type=_sketch, help="Haar sketch size(s) s1,s2,... or 'none'")
    g.add_argument("--no-normalize", dest="normalize", action="store_false", default=None,
                   help="skip coordinate-wise z-scoring")
    g.add_argument("--kernel", choices=("gaussian", "polynomial_decay"))
    g.add_argument("--beta", type=float, help="polynomial kernel exponent")
    g.add_argument("--m", type=_m, help="embedding dimension or 'auto'")
    g.add_argument("--t", type=float, help="diffusion time")


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--setup", help="uniform_boxes, trunc_gaussian, swiss_roll_a or mixed_b")
    p.add_argument("--noise-vars", dest="noise_vars", type=_floats, help="per-view noise variances")
    p.add_argument("--seed", dest="master_seed", type=int)
    p.add_argument("--n-per-cluster", dest="n_per_cluster", type=int)
    p.add_argument("--n", type=int, help="manifold sample size")
    p.add_argument("--p", type=int, help="ambient dimension")


CONFIG_KEYS = ("omega", "c_grid", "delta", "min_kernel_mass", "sketch", "normalize", "kernel", "beta",
               "m", "t", "mode", "setup", "noise_vars", "master_seed", "n_per_cluster", "n", "p",
               "replications", "workers", "failure_budget", "kmeans_restarts", "n_clusters", "trust_k")


def _resolve(args, kind: str | None = None, **fixed) -> ExperimentConfig:
    base = load_config(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    base.update({k: v for k, v in fixed.items() if v is not None})
    if kind is not None:
        base["kind"] = kind
    if "setup" not in base and "kind" in base:
        base["setup"] = "uniform_boxes" if base["kind"] == "cluster" else "swiss_roll_a"
    if "noise_vars" not in base and base.get("kind") == "manifold":
        base["noise_vars"] = [0.05, 0.2]
    return ExperimentConfig.from_dict(base)


def _write_manifest(outdir: Path, cfg: ExperimentConfig, extra: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(json.dumps(_manifest(cfg, extra), indent=2) + "\n",
                                          encoding="utf-8")


def cmd_gen_data(args) -> int:
    kind = args.kind or ("manifold" if args.setup in ("swiss_roll_a", "mixed_b") else "cluster")
    cfg = _resolve(args, kind)
    seed = cfg.master_seed
    if kind == "cluster":
        K = len(cfg.noise_vars)
        lm = gen_clusters(ClusterGenSpec(cfg.setup, cfg.n_per_cluster, p=(cfg.p,) * K,
                                         noise_vars=cfg.noise_vars, seed=seed))
    else:
        lm = gen_manifolds(ManifoldGenSpec(cfg.setup, cfg.n, cfg.p, cfg.noise_vars, seed))
    out = Path(args.out)
    paths = save_views(lm.data, out)
    np.savetxt(out / "labels.csv", lm.labels, fmt="%d")
    np.savetxt(out / "clean.csv", lm.clean_reference, delimiter=",", fmt="%.17g")
    _write_manifest(out, cfg, {"generator": lm.manifest, "views": [p.name for p in paths]})
    print(f"wrote {len(paths)} views of {lm.data.n} samples to {out}")
    return EXIT_OK


def _pipeline_from_views(args, **fixed):
    cfg = _resolve(args, "cluster", **fixed)
    data = load_views(args.views)
    return cfg, run_pipeline(data, cfg)


def cmd_select_bandwidth(args) -> int:
    cfg = _resolve(args, "cluster")
    from .bandwidth import select_bandwidths
    from .datasets import zscore_normalize
    from .sketching import sketch_dataset

    data = load_views(args.views)
    if cfg.normalize:
        data = zscore_normalize(data)
    if cfg.sketch is not None:
        data = sketch_dataset(data, cfg.sketch)
    omega = cfg.omega if isinstance(cfg.omega, str) else np.asarray(cfg.omega, dtype=float)
    report = select_bandwidths(data, omega=omega, c_grid=cfg.grid(), delta=cfg.delta,
                               kernel=cfg.kernel_spec(), min_kernel_mass=cfg.min_kernel_mass)
    text = report.to_json(indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"c* = {report.c_star:.6g}, eps = {np.array2string(report.epsilon, precision=6)}")
    else:
        print(text)
    return EXIT_OK


def cmd_embed(args) -> int:
    mode = args.mode or "averaged"
    cfg, out = _pipeline_from_views(args, mode="averaged" if mode == "view" else mode)
    path = save_embedding_csv(out.E, args.out, mode)
    out.report.to_json(path.with_name(path.stem + "_bandwidth.json"), indent=2)
    print(f"m = {out.m}, c* = {out.report.c_star:.6g}; wrote {path}")
    return EXIT_OK


def cmd_scree(args) -> int:
    _, out = _pipeline_from_views(args)
    paths = emit_scree(out.spectrum, args.out)
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def _bench(args, kind: str) -> int:
    cfg = _resolve(args, kind, mode=args.mode)

    def progress(row):
        if args.verbose:
            print(f"rep {row['rep']}: {row['status']}", file=sys.stderr)

    result = run_bench(cfg, progress)
    paths = write_outputs(result, args.out)
    sys.stdout.write(paths["summary"].with_suffix(".txt").read_text(encoding="utf-8"))
    sys.stdout.flush()
    if result.exceeded_budget:
        print(f"failure rate {result.failure_rate:.3f} exceeds budget {cfg.failure_budget}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_oracle_bias(args) -> int:
    rep = bias_slope_test(args.n, tuple(args.eps), sampling=args.sampling, seed=args.seed)
    obj = {"n": args.n, "epsilons": rep.epsilons.tolist(), "sampling": args.sampling, "seed": args.seed,
           "r_squared": rep.r_squared, "laplacian_correlation": rep.laplacian_correlation,
           "doubling_ratio": None if np.isnan(rep.doubling_ratio) else rep.doubling_ratio}
    text = json.dumps(obj, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_oracle_robustness(args) -> int:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "snr", "sigma2", "norm"])
    for seed in range(args.seed, args.seed + args.seeds):
        for row in robustness_sweep(tuple(args.snr), n=args.n, K=args.views, p=args.p, c=args.c, seed=seed):
            w.writerow([seed, repr(row.snr), repr(row.sigma2), repr(row.norm)])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        print(buf.getvalue(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grabmdm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic multiview dataset as CSV")
    p.add_argument("--kind", choices=("cluster", "manifold"))
    _add_scenario_flags(p)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("select-bandwidth", help="run the two-stage bandwidth selection")
    p.add_argument("views", nargs="+", help="one CSV per view, or one .json/.npz container")
    _add_pipeline_flags(p)
    p.add_argument("--out", help="report JSON path (stdout if omitted)")
    p.set_defaults(func=cmd_select_bandwidth)

    p = sub.add_parser("embed", help="compute a diffusion embedding")
    p.add_argument("views", nargs="+")
    _add_pipeline_flags(p)
    p.add_argument("--mode", choices=("averaged", "joint", "view"))
    p.add_argument("--out", required=True, help="embedding CSV path")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("scree", help="write eigenvalues, eigen-ratios and the second eigenvector")
    p.add_argument("views", nargs="+")
    _add_pipeline_flags(p)
    p.add_argument("--out", required=True, help="scree CSV path")
    p.set_defaults(func=cmd_scree)

    for name, kind in (("bench-cluster", "cluster"), ("bench-manifold", "manifold")):
        p = sub.add_parser(name, help=f"replicated {kind} benchmark")
        _add_pipeline_flags(p)
        _add_scenario_flags(p)
        p.add_argument("--mode", choices=("averaged", "joint"))
        p.add_argument("--replications", "-R", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--failure-budget", dest="failure_budget", type=float)
        p.add_argument("--kmeans-restarts", dest="kmeans_restarts", type=int)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--verbose", "-v", action="store_true")
        p.set_defaults(func=lambda a, k=kind: _bench(a, k))

    p = sub.add_parser("oracle-bias", help="circle bias check of the clean operator")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--eps", type=_floats, default=[0.05, 0.07, 0.1])
    p.add_argument("--sampling", choices=("grid", "iid"), default="grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_bias)

    p = sub.add_parser("oracle-robustness", help="clean vs noisy operator distance along an SNR ladder")
    p.add_argument("--snr", type=_floats, default=[1.0, 3.0, 10.0, 30.0, 100.0])
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--views", type=int, default=2)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_robustness)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GrabMDMError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

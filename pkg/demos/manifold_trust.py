"""Embed two noisy views of a Swiss roll and score the embedding against the clean points.

    python3 demos/manifold_trust.py [--n 300] [--seed 0]
"""
import argparse

from grabmdm import ManifoldGenSpec, gen_manifolds, trustworthiness
from grabmdm.experiments import ExperimentConfig, run_pipeline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for noise in ((0.0, 0.0), (0.05, 0.2), (0.45, 0.5)):
        lm = gen_manifolds(ManifoldGenSpec(n=args.n, noise_vars=noise, seed=args.seed))
        for normalize in (True, False):
            cfg = ExperimentConfig(kind="manifold", setup="swiss_roll_a", noise_vars=noise, normalize=normalize)
            out = run_pipeline(lm.data, cfg)
            T = trustworthiness(out.embedding, lm.clean_reference, 5)
            tag = "z-scored" if normalize else "raw     "
            print(f"noise {noise}  {tag}  c* = {out.report.c_star:.3g}  T(5) = {T:.3f}")


if __name__ == "__main__":
    main()

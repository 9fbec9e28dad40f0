"""Print the circle bias check and one robustness ladder.

    python3 demos/oracle_checks.py
"""
import numpy as np

from grabmdm.oracles import bias_slope_test, robustness_sweep


def main():
    for sampling in ("grid", "iid"):
        rep = bias_slope_test(n=2000, sampling=sampling, seed=1)
        print(f"bias ({sampling:4s}): R^2 = {rep.r_squared:.4f}, "
              f"corr with Laplacian = {rep.laplacian_correlation:.4f}, doubling ratio = {rep.doubling_ratio:.3f}")
    print("\n  SNR      sigma^2    ||A_clean - A_noisy||")
    for row in robustness_sweep((1, 3, 10, 30, 100, np.inf), seed=0):
        print(f"{row.snr:6g}  {row.sigma2:9.2e}  {row.norm:.4f}")


if __name__ == "__main__":
    main()

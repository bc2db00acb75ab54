"""xi(2bq + lam) against (J/pi) Phi(lam) on a dyadic sweep of lam."""
import argparse

from landau_res.model import AxisGaussian, Gaussian, make_config
from landau_res.ssf import singularity_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--q", type=int, default=0)
    ap.add_argument("--sign", type=int, default=1, choices=(1, -1))
    ap.add_argument("--start", type=float, default=2e-4)
    ap.add_argument("--steps", type=int, default=6)
    args = ap.parse_args()
    cfg = make_config(q=args.q, radial=Gaussian(0.25), axis=AxisGaussian(0.5), coupling=args.eps,
                      sign=args.sign)
    lams = [args.start * 2.0**-i for i in range(args.steps)]
    print(f"{'lam':>10} {'xi':>12} {'law':>12} {'ratio':>9} {'deviation':>10}")
    for row in singularity_check(args.q, lams, cfg):
        print(f"{row.lam:10.3e} {row.xi:12.6f} {row.law:12.6f} {row.ratio:9.5f} {row.deviation:10.2e}")


if __name__ == "__main__":
    main()

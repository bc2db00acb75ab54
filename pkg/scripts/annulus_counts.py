"""Zero counts in dyadic annuli r < |k| < 2r next to n_+(r) |ln r|."""
import argparse
import math

from landau_res.model import AxisGaussian, Gaussian, PowerLaw, make_config
from landau_res.resonances import annulus_census

PROFILES = {"gaussian": Gaussian(0.25), "power4": PowerLaw(4.0)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.6)
    ap.add_argument("--profile", choices=sorted(PROFILES), default="gaussian")
    ap.add_argument("--annuli", type=int, default=4)
    args = ap.parse_args()
    cfg = make_config(radial=PROFILES[args.profile], axis=AxisGaussian(0.5), coupling=args.eps)
    radii = [0.2 * 2.0**-i * math.sqrt(2 * cfg.b) for i in range(args.annuli)]
    print(f"{'r':>10} {'count':>6} {'n_plus':>7} {'ratio':>8}")
    for row in annulus_census(radii, cfg):
        print(f"{row.r:10.5f} {row.count:6d} {row.n_plus:7d} {row.ratio:8.4f}")


if __name__ == "__main__":
    main()

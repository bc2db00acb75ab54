"""Resonances of a weak repulsive Gaussian near the lowest level, against -i eps b_l.

    python scripts/localization_sweep.py --eps 0.02 0.01 0.005
"""
import argparse
import math

import numpy as np

from landau_res.model import AxisGaussian, Gaussian, make_config
from landau_res.operator import bq_spectrum
from landau_res.resonances import Region, band_counts, band_radii, locate_resonances


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, nargs="+", default=[0.02, 0.01, 0.005])
    ap.add_argument("--q", type=int, default=0)
    ap.add_argument("--r-out", type=float, default=0.5)
    args = ap.parse_args()
    floor = 1e-3 * math.sqrt(2)
    for eps in args.eps:
        cfg = make_config(q=args.q, radial=Gaussian(0.25), axis=AxisGaussian(0.5), coupling=eps)
        radii = [args.r_out] + band_radii(cfg, floor, args.r_out)
        res = locate_resonances(Region.annulus(radii[-1], args.r_out), cfg)
        b = np.array([v for _, v in bq_spectrum(cfg)])
        print(f"eps = {eps}")
        print(f"  {'Re k':>12} {'Im k':>14} {'ell':>4} {'|k + i b|/eps':>14}")
        for r in sorted(res, key=lambda r: -r.k.imag):
            d = np.abs(r.k + 1j * b)
            i = int(np.argmin(d))
            print(f"  {r.k.real:12.3e} {r.k.imag:14.8f} {i:4d} {d[i] / eps:14.3e}")
        for row in band_counts(res, cfg, radii):
            print(f"  band ({row.r_lo:.5f}, {row.r_hi:.5f}): located {row.located}, rank {row.rank}")


if __name__ == "__main__":
    main()

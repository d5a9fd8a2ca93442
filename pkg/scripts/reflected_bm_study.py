"""Reflected Brownian motion on [0, 1]: grid Chapman-Kolmogorov defect and
distance to the limits M (t -> 0) and Pi (t -> infinity).

Usage: python scripts/reflected_bm_study.py [--sizes 16,32,64,128] [--times 0.001,0.01,0.1,1,10]
"""
import argparse
import csv
import sys

from markovcopula.copulas import PI, M
from markovcopula.grid import discretize, markov_product, sup_distance
from markovcopula.simulate import ReflectedBMParams, reflected_bm_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="16,32,64,128")
    ap.add_argument("--times", default="0.001,0.01,0.1,1,10")
    args = ap.parse_args()
    out = csv.writer(sys.stdout)
    out.writerow(["n", "t", "ck_defect", "dist_to_M", "dist_to_Pi"])
    for n in (int(s) for s in args.sizes.split(",")):
        Mg, Pg = discretize(M, n), discretize(PI, n)
        for t in (float(s) for s in args.times.split(",")):
            g = reflected_bm_grid(ReflectedBMParams(t), n)
            ck = sup_distance(markov_product(g, g), reflected_bm_grid(ReflectedBMParams(2 * t), n))
            out.writerow([n, t, f"{ck:.3e}", f"{sup_distance(g, Mg):.4g}", f"{sup_distance(g, Pg):.3e}"])


if __name__ == "__main__":
    main()

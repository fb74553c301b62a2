"""Bias of the clamped Euler BEP scheme against the exact dual value, per step size.

Usage: python3 scripts/bep_dt_sweep.py [--replicas N] [--two-k 1/2 1]
"""
import argparse
from fractions import Fraction

from duality_lab.duality import make_pair
from duality_lab.processes import Graph
from duality_lab.semigroup import mc_duality_check

X0, N0, T = (1.0, 2.0), (1, 1), 0.5


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=100_000)
    ap.add_argument("--two-k", nargs="+", default=["1/2", "1"])
    ap.add_argument("--dt", nargs="+", type=float, default=[5e-3, 5e-4, 1e-4])
    args = ap.parse_args()
    g = Graph.path(2)
    print("two_k   dt        forward    exact      bias      SE       bias/SE")
    for raw in args.two_k:
        pair = make_pair("bep-sip", two_k=Fraction(raw))
        for dt in args.dt:
            cmp = mc_duality_check(pair, g, X0, N0, T, replicas=args.replicas, seed=1, dt=dt)
            diff = cmp.forward.value - cmp.dual.value
            se = cmp.combined_se
            print(f"{raw:<7} {dt:<9.0e} {cmp.forward.value:<10.5f} {cmp.dual.value:<10.5f} "
                  f"{diff:<+9.4f} {se:<8.4f} {diff / se:+.2f}")


if __name__ == "__main__":
    main()

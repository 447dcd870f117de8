"""Traveling waves with outer density.

In vitro the outer density only rescales the speed by 1 / (1 - n_R).  In
vivo the outer cells consume nutrient, which changes the whole wave; the
table lists speed, rim width and interface data up to the density
threshold.

    python demos/traveling_waves.py            # about a minute
    python demos/traveling_waves.py --quick
"""
import argparse

from necrosim import travelwave as tw
from necrosim.model import (IN_VITRO, IN_VIVO, IgnitionAffine, IgnitionConstant, Linear,
                            ModelParams, TwoLevel)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="only two in vivo densities")
    args = ap.parse_args()

    P = ModelParams(1.0, IgnitionConstant(1.0, 1.0, 0.4), TwoLevel(1.0, 0.5), IN_VITRO)
    print("in vitro")
    print(f"{'n_R':>5} {'sigma':>12} {'sigma(1-n_R)':>14} {'R':>10}")
    for n_R in (0.0, 0.3, 0.6, 0.9):
        s = tw.tw_invitro(tw.TWConfig(n_R, IN_VITRO, P))
        print(f"{n_R:5.2f} {s.sigma:12.8f} {s.sigma * (1 - n_R):14.10f} {s.R:10.6f}")

    Q = ModelParams(1.0, IgnitionAffine(2.0, 0.2, 1.2, 0.2), Linear(1.0), IN_VIVO)
    nbar = tw.threshold_nbar(Q)
    print(f"\nin vivo, density threshold n_bar = {nbar:.10f}")
    print(f"{'n_R':>5} {'sigma':>12} {'R':>10} {'c_R':>10} {'c_R_prime':>10} {'resid':>9}")
    grid = (0.0, 0.25) if args.quick else (0.0, 0.1, 0.25, 0.4, 0.5)
    for n_R in grid:
        s = tw.solve_sigma(tw.TWConfig(n_R, IN_VIVO, Q))
        print(f"{n_R:5.2f} {s.sigma:12.8f} {s.R:10.6f} {s.c_R:10.6f} {s.c_R_prime:10.6f} "
              f"{s.residuals['velocity_law']:9.1e}")
    try:
        tw.solve_sigma(tw.TWConfig(min(nbar + 0.05, 0.99), IN_VIVO, Q))
    except tw.NoWaveFound as exc:
        print(f"n_R above the threshold: {exc}")


if __name__ == "__main__":
    main()

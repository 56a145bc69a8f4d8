"""Cross-check of the emission rate by three routes at Delta = -157 Gamma.

closed form, broadened golden-rule quadrature, plain Monte Carlo over 3D
Boltzmann momenta, and the momentum-averaged quantum-jump rate.
"""
import argparse

import numpy as np

from photontherm import jump_mc as J, params as P, rates as R


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10**7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    yb = P.yb_556()
    drive = P.fig4_drive(0.1, yb)
    T = P.doppler_temperature(yb, drive)
    print(f"{'offset':>7} {'closed':>12} {'numeric':>12} {'monte carlo':>20} {'jump avg':>12}")
    for off in np.linspace(-6, 6, 7):
        mode = P.mode_at_offset(yb, drive, off * yb.Gamma, alpha_q=1e-3 * yb.Gamma)
        c = R.lambda_plus_closed(yb, drive, mode, T)
        n = R.lambda_plus_numeric(yb, drive, mode, T)
        mc, se = R.lambda_plus_monte_carlo(yb, drive, mode, T, samples=args.samples, seed=args.seed)
        j = J.averaged_emission_rate(yb, drive, mode, T)
        print(f"{off:7.2f} {c:12.5e} {n:12.5e} {mc:12.5e}+-{se:.1e} {j:12.5e}")


if __name__ == "__main__":
    main()

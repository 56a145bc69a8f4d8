"""Regime map over (Omega/|Delta|, omega_L - omega_q) at Delta = -157 Gamma.

Runs the phase diagram on a 100 x 100 grid and writes the cells to CSV with a
text rendering of the regimes on stdout (G = GCE, # = gain, . = quasithermal).
"""
import argparse
import os

import numpy as np

from photontherm import equilibrium as E, params as P
from photontherm.cli import csv_text

SYMBOL = {"GCE": "G", "gain": "#", "quasithermal": ".", "invalid": "?"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/regime_map.csv")
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)

    yb = P.yb_556()
    G = yb.Gamma
    drive = P.fig4_drive(0.1, yb)
    D = abs(drive.detuning_bar)
    rabi = np.linspace(0.01, 0.5, args.steps) * D
    rel = np.linspace(-20, 15, args.steps) * G
    pd = E.phase_diagram(yb, drive, rabi, rel, threads=args.threads)
    reg = pd.regimes()
    ratio = pd.t_eff_ratio()
    rows = [{"rabi": Om / D, "omega_rel": y / G, "regime": reg[i, j], "t_eff_ratio": ratio[i, j],
             "nbar": pd.cells[i][j].nbar}
            for i, Om in enumerate(pd.rabi) for j, y in enumerate(pd.omega_rel)]
    with open(args.out, "w") as fh:
        fh.write(csv_text(["rabi", "omega_rel", "regime", "t_eff_ratio", "nbar"], rows))
    for i in range(len(pd.rabi) - 1, -1, -max(1, len(pd.rabi) // 25)):
        print(f"{pd.rabi[i] / D:5.3f} " + "".join(SYMBOL[s] for s in reg[i]))
    print(f"Omega_c/|Delta| = {pd.omega_c / D:.5f}; wrote {args.out}")


if __name__ == "__main__":
    main()

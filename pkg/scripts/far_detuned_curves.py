"""Photon number, delta_mu and T_o at Delta = -157 Gamma for a range of drives.

Writes three CSV files into --out-dir:
  nbar_curves.csv   nbar versus omega_L - omega_q for several Omega/|Delta|,
                    plus the lossless Bose-Einstein reference and the
                    standard-detuning curve;
  delta_mu.csv      delta_mu and the upper gain boundary versus Omega;
  transition_temperature.csv   T_o versus Omega.
"""
import argparse
import math
import os

import numpy as np

from photontherm import equilibrium as E, params as P
from photontherm.cli import csv_text


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="out/far_detuned")
    ap.add_argument("--points", type=int, default=401)
    args = ap.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    yb = P.yb_556()
    G = yb.Gamma
    base = P.fig4_drive(0.1, yb)
    T = P.doppler_temperature(yb, base)
    D = abs(base.detuning_bar)
    rel = np.linspace(-20, 15, args.points)
    offsets = -rel * G

    crit = E.delta_mu_and_critical(yb, base, T)
    print(f"Omega_c/|Delta_L| = {crit.omega_c / D:.5f}")

    rows, cols = [], ["omega_rel", "bose"]
    kT = P.KB * T
    for y in rel:
        x = -P.HBAR * y * G / kT
        rows.append({"omega_rel": y, "bose": 1 / math.expm1(x) if x > 0 else math.inf})
    for f in (0.04, 0.06, 0.1, 0.3):
        pts = E.equilibrium_curve(yb, base.with_rabi(f * D), offsets, T)
        name = f"nbar_rabi_{f:g}"
        cols.append(name)
        for row, p in zip(rows, pts):
            row[name] = p.nbar
    std = P.standard_drive(yb)
    pts = E.equilibrium_curve(yb, std, offsets, P.doppler_temperature(yb, std))
    cols.append("nbar_standard")
    for row, p in zip(rows, pts):
        row["nbar_standard"] = p.nbar
    with open(os.path.join(args.out_dir, "nbar_curves.csv"), "w") as fh:
        fh.write(csv_text(cols, rows))

    rabi = np.linspace(crit.omega_c / D * 1.0001, 0.5, 200)
    dm_rows, to_rows = [], []
    for f in rabi:
        res = E.delta_mu_and_critical(yb, base.with_rabi(f * D), T)
        dm_rows.append({"rabi": f, "delta_mu": res.delta_mu / (P.HBAR * G),
                        "delta_mu_upper": res.delta_mu_upper / (P.HBAR * G)})
        mode = P.mode_at_offset(yb, base, -res.delta_mu / P.HBAR)
        pt = E.equilibrium_point(yb, base.with_rabi(f * D), mode, T)
        to_rows.append({"rabi": f, "T_o": pt.T_o, "T_o_over_T": pt.T_o / T})
    with open(os.path.join(args.out_dir, "delta_mu.csv"), "w") as fh:
        fh.write(csv_text(["rabi", "delta_mu", "delta_mu_upper"], dm_rows))
    with open(os.path.join(args.out_dir, "transition_temperature.csv"), "w") as fh:
        fh.write(csv_text(["rabi", "T_o", "T_o_over_T"], to_rows))
    print(f"wrote {args.out_dir}")


if __name__ == "__main__":
    main()

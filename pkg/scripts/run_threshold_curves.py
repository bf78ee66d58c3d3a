#!/usr/bin/env python3
"""Threshold curves: output power vs atom number and vs pump power,
with the per-family threshold values (fundamental first, then the
higher transverse families)."""

import argparse
import pathlib
from dataclasses import replace

import numpy as np

from motlaser.errors import NoThresholdError
from motlaser.gain import (LaserSystem, OperatingPoint, calibrate,
                           output_power, steady_state, threshold_solve)

FAMILIES = (0, 37, 74, 111)


def curve(vary, values, op, system, calib):
    rows = []
    for x in values:
        probe = replace(op, **{vary: float(x)})
        sol = steady_state(probe, FAMILIES, system, calib)
        rows.append((float(x), sum(
            output_power(n, system.cavity, system.green.wavelength)
            for n in sol.photons.values())))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results", type=pathlib.Path)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    system = LaserSystem()
    op = OperatingPoint()
    calib = calibrate(system, op)

    for vary, key, values in (
            ("atoms", "total_atoms", np.linspace(1e3, 4e4, 60)),
            ("pump_power", "pump_power", np.linspace(1e-6, 2e-4, 60))):
        rows = curve(key, values, op, system, calib)
        path = args.outdir / f"threshold_{vary}.csv"
        path.write_text("\n".join([f"{vary},power_w"] + [
            f"{x:.17e},{p:.17e}" for x, p in rows]) + "\n")
        print(f"{path}:")
        for family in FAMILIES:
            try:
                th = threshold_solve(vary if vary == "atoms" else "pump_power",
                                     op, system, calib, family=family)
                print(f"  TEM{family} threshold: {th:.6g}")
            except NoThresholdError:
                print(f"  TEM{family}: no threshold in range")


if __name__ == "__main__":
    main()

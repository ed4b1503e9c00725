"""Solve the default (reference) problem through the CLI and summarize the result.

    python3 scripts/reference_run.py [--out DIR]

Writes the usual solve outputs into DIR, then prints the certification table
and the observed ranges of the plotted quantities.
"""
import argparse
import sys

import numpy as np

from purcell import tables
from purcell.cli import main as cli_main


def summarize(out):
    tr = tables.read_trajectory(f"{out}/trajectory.csv", units="deg")
    a, u = np.degrees(tr.alphas), np.degrees(tr.controls)
    print(f"alpha1 [deg]  {a[:, 0].min():9.3f} {a[:, 0].max():9.3f}")
    print(f"alpha2 [deg]  {a[:, 1].min():9.3f} {a[:, 1].max():9.3f}")
    print(f"u [deg/s]     {u.min():9.3f} {u.max():9.3f}")
    print(f"x [m]         {tr.poses[:, 0].min():9.4f} {tr.poses[:, 0].max():9.4f}")
    print(f"y [m]         {tr.poses[:, 1].min():9.4f} {tr.poses[:, 1].max():9.4f}")
    th = np.degrees(tr.poses[:, 2])
    print(f"theta [deg]   {th.min():9.3f} {th.max():9.3f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="out/reference")
    args = parser.parse_args()
    code = cli_main(["solve", "--out", args.out])
    print(open(f"{args.out}/residuals.txt").read())
    summarize(args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())

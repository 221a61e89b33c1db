"""Optimal barrier as a function of the safety level c, and the plateau threshold.

Writes a CSV (c, d_star, closed_form) and prints where d* = c begins.
"""
import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from chapter11 import value_engine as ve
from chapter11.errors import UnsupportedModelError
from chapter11.model_io import load_model

DEFAULT = Path(__file__).resolve().parents[1] / "models" / "reference.json"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model", nargs="?", default=str(DEFAULT))
    ap.add_argument("--c-max", type=float, default=8.0)
    ap.add_argument("--steps", type=int, default=80)
    ap.add_argument("-o", "--output")
    args = ap.parse_args()

    m = load_model(args.model)
    cs = np.linspace(0.05, args.c_max, args.steps)
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    w = csv.writer(out)
    w.writerow(["c", "d_star", "closed_form"])
    interior = []
    for c in cs:
        mc = m.replace(c=float(c))
        d = ve.optimal_barrier(mc).d_star
        try:
            cf = ve.cl_closed_form_barrier(mc)
        except UnsupportedModelError:
            cf = ""
        w.writerow([f"{c:.17g}", f"{d:.17g}", cf if cf == "" else f"{cf:.17g}"])
        interior.append(d > c)
    if out is not sys.stdout:
        out.close()
    if interior[0] and not interior[-1]:
        k = interior.index(False)
        t = ve.plateau_threshold(m, float(cs[k - 1]), float(cs[k]))
        print(f"d* = c for c >= {t:.10f}", file=sys.stderr)


if __name__ == "__main__":
    main()

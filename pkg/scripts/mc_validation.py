"""Compare every simulated quantity with its analytic counterpart.

    python3 scripts/mc_validation.py [model.json] --paths 400000 --seed 1
"""
import argparse
from dataclasses import replace
from pathlib import Path

from chapter11 import scale_fn as sf
from chapter11 import simulator as sim
from chapter11 import value_engine as ve
from chapter11.model_io import load_model

DEFAULT = Path(__file__).resolve().parents[1] / "models" / "reference.json"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model", nargs="?", default=str(DEFAULT))
    ap.add_argument("--paths", type=int, default=400_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    m = load_model(args.model)
    sol = ve.optimal_barrier(m)
    d = sol.d_star
    cfg = sim.SimConfig(args.paths, args.seed)
    basis = sf.scale_basis(m.solvent, m.q)
    z_exit = max(3.0, m.c)
    rows = [
        ("V(d*) solvent", sim.simulate_value(m, d, d, 0, cfg), sol.V(d)),
        ("V(1.5) solvent", sim.simulate_value(m, d, 1.5, 0, cfg), sol.V(1.5)),
        ("V~(-0.5)", sim.simulate_value(m, d, -0.5, 1, cfg), sol.V_tilde(-0.5)),
        ("2nd moment at d*", sim.simulate_moment(m, 2, d, d, 0, cfg), ve.moment(m, 2, d, d)),
        ("3rd moment at d*", sim.simulate_moment(m, 3, d, d, 0, cfg), ve.moment(m, 3, d, d)),
        ("exit 0.5 -> z", sim.simulate_exit(m, z_exit, 0.5, 0, cfg), ve.exit_transform(m, 0.5, z_exit)),
        ("classical exit 1 -> 2",
         sim.simulate_exit(m, 2.0, 1.0, 0, replace(cfg, regime_switching=False)),
         ve.classical_exit_up(basis, 1.0, 2.0)),
    ]
    print(f"d* = {d:.10f} ({sol.regime_case.value}), {args.paths} paths, seed {args.seed}")
    print(f"{'quantity':24s} {'MC mean':>14s} {'std err':>10s} {'analytic':>14s} {'z':>7s}")
    for name, est, ref in rows:
        print(f"{name:24s} {est.mean:14.8f} {est.std_err:10.2e} {ref:14.8f} {est.z_score(ref):7.2f}")


if __name__ == "__main__":
    main()

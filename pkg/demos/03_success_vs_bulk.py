"""Fraction of networks that learn a random map, against the middle layer size.

A bigger bulk layer offers more alternative paths, so more networks find a
solution within the step budget. Thirty realizations keep this quick; the
acceptance suite uses a hundred.
"""
from pathlib import Path

from memlearn import experiments as ex, output

out = Path(__file__).with_name("demo_output")
out.mkdir(exist_ok=True)

spec = ex.SweepSpec(grid=[(3, 3, 20), (3, 3, 100), (3, 3, 400)], realizations=30, seed=3)
res = ex.run_success_sweep(spec)
for p in res.points:
    print(f"N_bulk={p.n_bulk:4d}: success@1000 = {p.success:.2f} +- {p.sem:.2f}, "
          f"half learned by step {p.steps_to(0.5)}")

with open(out / "success.svg", "w") as fh:
    output.emit_svg(res, fh, title="success vs step")

"""Learn every 3x3 map, shuffle the devices, and learn them all again.

Resistances only grow under punishment, so the mean keeps rising while the
spread relative to the mean settles. The coefficient of variation levels
off near one third.
"""
from pathlib import Path

from memlearn import experiments as ex, output
from memlearn.network import NetworkDims
from memlearn.trainer import TrainerConfig

out = Path(__file__).with_name("demo_output")
out.mkdir(exist_ok=True)

res = ex.run_relearn_shuffle(NetworkDims(3, 400, 3), TrainerConfig(), cycles=4, seed=6, realizations=2)
for count in range(0, len(res.cv), res.maps_per_pass):
    print(f"{count:4d} maps learned: <R> = {res.mean_r[count]:7.1f}, <CV> = {res.cv[count]:.3f}")
print("maps that failed to learn:", res.failures)

with open(out / "relearn_cv.svg", "w") as fh:
    output.emit_svg(res, fh, title="CV vs maps learned")
h = res.histograms[max(res.histograms)]
with open(out / "relearn_hist.svg", "w") as fh:
    output.emit_svg(None, fh, title="R / <R>", table=output.histogram_rows(h["norm_counts"], h["norm_edges"]))

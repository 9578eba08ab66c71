"""A single threshold memristor driven directly by a voltage source.

Small triangles stay inside the dead zone and leave R alone; one large
negative excursion pushes R up, and the device keeps the new value.
"""
from pathlib import Path

import numpy as np

from memlearn import experiments as ex, output

out = Path(__file__).with_name("demo_output")
out.mkdir(exist_ok=True)

params = ex.hysteresis_demo_params()
print(f"beta={params.beta}, V_th={params.v_threshold}, R_min={params.r_min}, R_max={params.r_max}")

wave = ex.hysteresis_waveform(small=0.05, large=-0.5)
demo = ex.run_device_demo(params, wave)

n_small = len(ex.triangle(0.05, 20))
n_large = len(ex.triangle(-0.5, 50))
print("R during the small triangles:", np.unique(demo.r[: 3 * n_small + 1]))
print("R after the large excursion: ", demo.r[3 * n_small + n_large])
print("R at the end:                ", demo.r[-1])

# the I-V pairs trace a pinched loop; only the large excursion opens it
with open(out / "device_iv.svg", "w") as fh:
    output.emit_svg(demo, fh, title="I-V of one memristor")
with open(out / "device.csv", "w") as fh:
    output.emit_csv(demo, fh)
print("wrote", out / "device_iv.svg")

"""View functions and kernels on the gasket as objects on the unit interval.

The measure isomorphism between the gasket and [0, 1] sends level-m cell
averages to a step function on the base-3 grid, and cell-averaged kernels to
pixel images on the unit square.  Writes figure data to demos/out/.
"""

import csv
from pathlib import Path

import numpy as np

from fractalips import (
    SelfSimilarMeasure,
    builtin_kernels,
    kernel_to_graphon,
    martingale_level,
    preset,
    project_kernel,
    transfer_to_interval,
)

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

meas = SelfSimilarMeasure.uniform(preset("sg"))
phi = lambda x: np.exp(-np.abs(x[:, 0] - x[:, 1]))

# conditional-expectation levels form a martingale; transfer each level
for m in (2, 4, 6):
    fld = martingale_level(meas, phi, m, 3)
    step = transfer_to_interval(fld)
    with open(OUT / f"step_level{m}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["left", "right", "value"])
        for i in range(step.n_cells):
            w.writerow([step.breakpoints[i], step.breakpoints[i + 1],
                        step.values[i, 0]])
    print(f"level {m}: {step.n_cells} interval cells, "
          f"integral = {step.integral()[0]:.8f}")

# the same picture for a two-point kernel: a graphon-style pixel image
km = project_kernel(meas, builtin_kernels(2)["expdist"], 4, 2)
img = kernel_to_graphon(km)
np.savetxt(OUT / "graphon_pixels_level4.csv", img.values, delimiter=",")
print(f"\nkernel pixel image: {img.values.shape[0]}x{img.values.shape[1]}, "
      f"range [{img.values.min():.3f}, {img.values.max():.3f}]")
print("files written to", OUT)

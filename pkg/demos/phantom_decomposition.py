"""
Separating a moving vessel from a static background
===================================================

Builds the default 128x128x20 phantom, runs the TV-regularized tensor RPCA
and compares contrast-to-noise ratios before and after.  A side-by-side
PNG of one frame (observation, background, dynamic background, foreground)
is written to ``demo_output/``.

Run with ``python demos/phantom_decomposition.py``; the solve takes about
ten seconds.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from tvtrpca import PhantomSpec, cnr, generate_phantom, run
from tvtrpca.fileio import to_display

out = Path("demo_output")
out.mkdir(exist_ok=True)

ph = generate_phantom(PhantomSpec(seed=0))
o = ph.observation
print("observation", o.shape, "range", o.min().round(3), o.max().round(3))

# The solver logs nothing by default; the callback shows progress.
dec = run(o, callback=lambda s: s.k % 10 == 0 and print(f"  iteration {s.k:3d}  residual {s.residual:.2e}"))
print(f"stopped after {dec.iterations} iterations, converged={dec.converged}")

# CNR against the phantom's true vessel masks.  The observation mixes the
# vessel with background texture; the foreground layer isolates it.
for name, layer in (("observation", o), ("foreground", dec.foreground)):
    reps = [cnr(layer[:, :, k], ph.masks[:, :, k]) for k in range(o.shape[2])]
    print(f"{name:12s} global CNR {np.mean([r.global_cnr for r in reps]):7.2f}"
          f"   local CNR {np.mean([r.local_cnr for r in reps]):6.2f}")

k = 10
panels = [to_display(layer)[:, :, k] for layer in
          (o, dec.background, dec.dynamic_background, dec.foreground)]
Image.fromarray(np.hstack(panels)).save(out / "layers_frame10.png")
print("wrote", out / "layers_frame10.png")

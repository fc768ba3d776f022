"""Fan-target contrast of truth, bicubic and reconstruction per frequency."""
import numpy as np

from maskblur import kernels, metrics, model, mtf, recon, simkit

g = model.make_geometry(32, 32, 4)
x = mtf.render_fan_target(g.scene_side, 16)
P = simkit.generate_patterns(g, 100, seed=0)
op = model.SystemOperator(g, P.bits, kernels.by_name("disk_1.667", g))
ys = simkit.simulate(op, x, simkit.NoiseModel("gaussian_psnr", 40.0), seed=1)
res, _ = recon.reconstruct_best(op, ys, x)

radii = np.linspace(0.06, 0.45, 14) * g.scene_side
curves = [mtf.mtf_fan(im, radii=radii, spokes=16)
          for im in (x, metrics.bicubic_baseline(x, g), res.estimate)]
print("freq    truth  bicubic  recon")
for f, t, b, r in zip(curves[0].frequencies, *(c.contrasts for c in curves)):
    print(f"{f:.3f}  {t:.3f}  {b:.3f}    {r:.3f}{'  > sensor Nyquist' if f > 0.25 else ''}")

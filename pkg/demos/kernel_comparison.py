"""Reconstruct one scene through every library kernel at K=100.

Usage: python3 demos/kernel_comparison.py [camera|astronaut|coffee]
Takes a few minutes (one 4096x4096 eigendecomposition per kernel).
"""
import sys

from maskblur import kernels, metrics, model, recon, simkit

name = sys.argv[1] if len(sys.argv) > 1 else "astronaut"
g = model.make_geometry(32, 32, 4)
x = simkit.scene_from_array(simkit.standard_image(name), g, maxval=255)
P = simkit.generate_patterns(g, 100, seed=0)
noise = simkit.NoiseModel("gaussian_psnr", 40.0)

bic = metrics.quality(metrics.bicubic_baseline(x, g), x)
print(f"{'bicubic':>10s}  ssim {bic.ssim:.3f}  psnr {bic.psnr_db:.2f}")
for kname, k in kernels.kernel_library(g).items():
    op = model.SystemOperator(g, P.bits, k)
    ys = simkit.simulate(op, x, noise, seed=1)
    res, _ = recon.reconstruct_best(op, ys, x)
    q = metrics.quality(res.estimate, x)
    print(f"{kname:>10s}  ssim {q.ssim:.3f}  psnr {q.psnr_db:.2f}  delta {res.delta_used:.3g}")

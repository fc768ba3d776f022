"""SSIM against the number of measurements for the disk 1 2/3 kernel.

Uses CG with a fixed delta so each K costs seconds instead of a dense
eigendecomposition; the delta is the one the dense sweep picks at K=100.
"""
from maskblur import kernels, metrics, model, recon, simkit

g = model.make_geometry(32, 32, 4)
x = simkit.scene_from_array(simkit.standard_image("astronaut"), g, maxval=255)
P = simkit.generate_patterns(g, 500, seed=0)
disk = kernels.by_name("disk_1.667", g)
noise = simkit.NoiseModel("gaussian_psnr", 40.0)

op = model.SystemOperator(g, P.bits[:100], disk)
best, _ = recon.reconstruct_best(op, simkit.simulate(op, x, noise, seed=1), x)
per_measurement = best.delta_used / 100
for K in (10, 25, 50, 100, 200, 500):
    op = model.SystemOperator(g, P.bits[:K], disk)
    ys = simkit.simulate(op, x, noise, seed=1)
    cfg = recon.TikhonovConfig(delta=per_measurement * K, solver=recon.CG, cg_tol=1e-8)
    res = recon.solve(op, ys, cfg)
    print(f"K={K:3d}  ssim {metrics.quality(res.estimate, x).ssim:.3f}  cg iters {res.solver_iterations}")

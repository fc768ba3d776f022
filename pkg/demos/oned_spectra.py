"""Expected and sampled spectra of the 1D two-to-one model.

Prints the eigenvalue range of the expected normalized gram for a few
[a b a] filters, then how close ten K=50 realizations come to it.
"""
import numpy as np

from maskblur import spectral

R = 256
for a, b in [(1, 2), (1, 0), (1, -1), (1, 1)]:
    filt = spectral.SymmetricFilter1D(a, b)
    rep = spectral.spectrum(spectral.expected_gram_1d(R, filt))
    print(f"[{a} {b} {a}]  block eigenvalues {spectral.block_eigenvalues_1d(filt)}"
          f"  ratio {spectral.filter_condition_ratio(filt):g}"
          f"  min normalized {rep.normalized[-1]:.4f}")

filt = spectral.SymmetricFilter1D(1, 2)
exp = spectral.expected_gram_1d(R, filt)
for K in (50, 500, 5000):
    d = [np.linalg.norm(spectral.empirical_gram_1d(R, filt, K=K, seed=s) - exp)
         for s in range(10)]
    print(f"K={K:5d}  mean Frobenius distance to expected {np.mean(d):.3f}")

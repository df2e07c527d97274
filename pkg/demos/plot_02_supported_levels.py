"""
How many secondary users fit
============================

K depends on the primary's fading gain, so it is random. Its distribution
has a closed form, and its mean keeps growing with transmit SNR.
"""

# %%
# Analytic pmf next to a Monte Carlo histogram at 20 dB.
import numpy as np

from crnoma import SystemParams, k_mean, k_pmf, simulate_k

params = SystemParams.from_db(1.0, 20.0)
pmf = k_pmf(params)
emp, est = simulate_k(params, 200_000, seed=1)
for n in range(len(pmf.probs)):
    mc = emp[n] if n < len(emp) else 0.0
    print(f"P(K={n:2d})  analytic {pmf.probs[n]:.5f}  simulated {mc:.5f}")
print(f"truncated at n={pmf.truncation_index}, tail mass {pmf.tail_mass:.1e}")

# %%
# The mean, with a rigorous bound on what truncation leaves out.
print(f"E[K] = {pmf.mean():.4f} (MC {est.mean:.4f} +/- {est.std_error:.4f}),"
      f" tail bound {pmf.mean_tail_bound(params):.1e}")

# %%
# Each 10 dB adds about log2(10) levels at R = 1, so the mean is unbounded.
for db in np.arange(0, 61, 10):
    print(f"{db:3d} dB  E[K] = {k_mean(SystemParams.from_db(1.0, db)):.3f}")

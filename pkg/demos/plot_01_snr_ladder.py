"""
The SNR ladder
==============

Secondary users are stacked at received-power levels chosen so that every
layer is decodable with SIC at the same target rate. This walks through the
ladder, the interference budget a primary user leaves, and how many levels
fit into it.
"""

# %%
# Levels for R = 1 bit per channel use. With eps = 1 they double each step,
# and the running total eta_n = 2**n - 1.
import numpy as np

from crnoma import SystemParams, build_ladder, count_supported, interference_budget

params = SystemParams.from_db(1.0, 20.0)
ladder = build_ladder(params, 8)
print("levels:", ladder.levels)
print("prefix:", ladder.prefix)

# %%
# Each level is decodable at rate R with only the lower levels left as
# interference.
eta_prev = np.concatenate(([0.0], ladder.prefix[:-1]))
print("per-level rate:", np.log2(1 + ladder.levels / (1 + eta_prev)))

# %%
# The primary's channel sets the budget I. The count K is the number of
# prefixes that fit in I.
for h0 in (0.005, 0.05, 0.5, 5.0):
    budget = interference_budget(params, h0)
    print(f"h0={h0:<6} I={budget:10.2f}  K={count_supported(params.epsilon, budget)}")

# %%
# Lower target rates give a finer ladder, so more users fit in the same budget.
for rate in (0.5, 1.0, 2.0):
    p = SystemParams.from_db(rate, 20.0)
    print(f"R={rate}: K at h0=1 is {count_supported(p.epsilon, interference_budget(p, 1.0))}")

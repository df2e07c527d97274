"""
Secondary sum-rate
==================

Random scheduling has a closed-form sum-rate. Greedy scheduling, which puts
the weakest selected user on the lowest level, is simulated with the same
channel draws.
"""

# %%
from crnoma import SystemParams, simulate_sum_rate, sum_rate_closed_form

print(" dB   closed form   random MC        greedy MC")
for db in (0, 10, 20, 30):
    params = SystemParams.from_db(1.0, db, num_secondary=8)
    exact = sum_rate_closed_form(params)
    rnd = simulate_sum_rate(params, "random", 200_000, seed=2)
    grd = simulate_sum_rate(params, "greedy", 200_000, seed=2)
    print(f"{db:3d}   {exact:9.5f}   {rnd.mean:.5f}+/-{rnd.std_error:.5f}   {grd.mean:.5f}")

# %%
# At high SNR the sum-rate approaches R*M because every slot fits all
# users and none of them are silenced.
print(sum_rate_closed_form(SystemParams.from_db(1.0, 60, num_secondary=8)))

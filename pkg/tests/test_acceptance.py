"""Acceptance criteria, each checked at its stated tolerance and runtime.

Every test records one PASS/FAIL line, and the lines are repeated in the
terminal summary. Oracle time (exact rationals, mpmath) is excluded from
the runtime budgets, which apply to the library calls.
"""

import math
import time

import numpy as np

from acceptance_log import record
from crnoma.analysis import (
    aoi_crnoma,
    aoi_tdma,
    k_mean,
    k_pmf,
    phi_vector,
    sum_rate_closed_form,
    sum_rate_direct,
)
from crnoma.cli import main
from crnoma.ladder import SystemParams, closed_form_level, eta_closed_form, interference_budget, level_array
from crnoma.simulate import ScheduleOutcome, run_trial, sic_decode, simulate_aoi, simulate_k, simulate_sum_rate

from oracles import exact_ladder, phi_series


class Clock:
    def __init__(self):
        self.elapsed = 0.0

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed += time.perf_counter() - self._t0


def test_ac01_ladder_matches_recursion():
    clock = Clock()
    worst_ulp, worst_rate = 0.0, 0.0
    for rate in (0.5, 1, 2):
        eps = SystemParams(rate, 1.0).epsilon
        ref_levels, _ = exact_ladder(eps, 50)
        with clock:
            levels = np.array([closed_form_level(eps, k) for k in range(1, 51)])
            eta_prev = np.array([eta_closed_form(eps, k - 1) for k in range(1, 51)])
            identity = np.log2(1 + levels / (1 + eta_prev))
        ulp = np.abs(levels - ref_levels) / np.array([math.ulp(x) for x in ref_levels])
        worst_ulp = max(worst_ulp, ulp.max())
        worst_rate = max(worst_rate, np.max(np.abs(identity - rate) / rate))
    ok = worst_ulp <= 4 and worst_rate <= 1e-10 and clock.elapsed < 1
    record(1, ok, "ladder vs recursion",
           f"max {worst_ulp:.0f} ulp (<=4), rate identity rel {worst_rate:.1e} (<=1e-10), {clock.elapsed:.3f}s (<1s)")
    assert ok


def test_ac02_k_pmf():
    clock = Clock()
    worst_norm, worst_emp = 0.0, 0.0
    with clock:
        for db in (0, 10, 20, 30):
            params = SystemParams.from_db(1, db)
            pmf = k_pmf(params)
            worst_norm = max(worst_norm, abs(pmf.total() - 1), pmf.tail_mass)
            emp, _ = simulate_k(params, 1_000_000, seed=db + 1)
            n = max(len(emp), len(pmf.probs))
            a = np.pad(pmf.probs, (0, n - len(pmf.probs)))
            e = np.pad(emp, (0, n - len(emp)))
            worst_emp = max(worst_emp, np.max(np.abs(a - e)))
    ok = worst_norm <= 1e-12 and worst_emp <= 5e-3 and clock.elapsed < 30
    record(2, ok, "K pmf",
           f"normalisation {worst_norm:.1e} (<=1e-12), empirical max-abs {worst_emp:.2e} (<=5e-3), "
           f"{clock.elapsed:.1f}s (<30s)")
    assert ok


def test_ac03_k_mean_growth():
    clock = Clock()
    with clock:
        means = np.array([k_mean(SystemParams.from_db(1, db)) for db in np.arange(0, 40.5, 0.5)])
        gain = k_mean(SystemParams.from_db(1, 40)) - k_mean(SystemParams.from_db(1, 20))
    increasing = bool(np.all(np.diff(means) > 0))
    ok = increasing and gain >= 1 and clock.elapsed < 5
    record(3, ok, "E{K} growth",
           f"strictly increasing on 0-40 dB: {increasing}, E(40)-E(20) = {gain:.3f} (>=1), {clock.elapsed:.2f}s (<5s)")
    assert ok


def test_ac04_sum_rate_monte_carlo():
    clock = Clock()
    rel = {}
    with clock:
        for db in (10, 20, 30):
            params = SystemParams.from_db(1, db, 8)
            est = simulate_sum_rate(params, "random", 1_000_000, seed=db)
            exact = sum_rate_closed_form(params)
            rel[db] = abs(est.mean - exact) / exact
    ok = max(rel.values()) <= 0.01 and clock.elapsed < 60
    detail = ", ".join(f"{db} dB {r:.2%}" for db, r in rel.items())
    record(4, ok, "sum-rate MC vs closed form", f"{detail} (<=1%), {clock.elapsed:.1f}s (<60s)")
    assert ok


def test_ac05_telescoping_oracles():
    clock = Clock()
    worst_phi, worst_tail = 0.0, 0.0
    for rate in (0.5, 1, 2):
        for db in (0, 10, 20, 30):
            for M in (1, 3, 8):
                params = SystemParams.from_db(rate, db, M)
                ref = phi_series(params.epsilon, params.snr_linear, M, terms=200)
                with clock:
                    phi = phi_vector(params)
                    closed = sum_rate_closed_form(params)
                    direct = sum_rate_direct(params, 1e-15)
                worst_phi = max(worst_phi, np.max(np.abs(phi - ref)))
                worst_tail = max(worst_tail, abs(closed - direct))
    ok = worst_phi <= 1e-12 and worst_tail <= 1e-12 and clock.elapsed < 1
    record(5, ok, "telescoping oracles",
           f"phi {worst_phi:.1e} (<=1e-12), sum-rate tail {worst_tail:.1e} (<=1e-12), {clock.elapsed:.3f}s (<1s)")
    assert ok


def test_ac06_tdma_monte_carlo():
    clock = Clock()
    rel = {}
    with clock:
        for rate in (0.5, 1):
            params = SystemParams.from_db(rate, 10, 3, 8, 2.0)
            eps, snr = params.epsilon, params.snr_linear
            formula = 2 + 4 * 8 * 2 * (2 * math.exp(eps / snr) - 1)
            sim = simulate_aoi(params, "tdma", 100_000, seed=7)
            rel[rate] = abs(sim.estimates["paper"].mean - formula) / formula
            assert aoi_tdma(params) == formula or math.isclose(aoi_tdma(params), formula, rel_tol=1e-14)
    ok = max(rel.values()) <= 0.01 and clock.elapsed < 60
    detail = ", ".join(f"R={r} {v:.2%}" for r, v in rel.items())
    record(6, ok, "TDMA AoI MC vs formula", f"{detail} (<=1%), {clock.elapsed:.1f}s (<60s)")
    assert ok


def test_ac07_crnoma_monte_carlo():
    clock = Clock()
    rel, worst_z = {}, 0.0
    with clock:
        for db in (5, 10, 15):
            params = SystemParams.from_db(0.5, db, 3, 8, 2.0)
            sim = simulate_aoi(params, "crnoma", 100_000, seed=db)
            exact = aoi_crnoma(params).value_seconds
            rel[db] = abs(sim.estimates["paper"].mean - exact) / exact
            phi = phi_vector(params)
            sigma = np.sqrt(phi * (1 - phi) / sim.super_frames)
            worst_z = max(worst_z, np.max(np.abs(sim.frame_success_rates() - phi) / sigma))
    ok = max(rel.values()) <= 0.02 and worst_z <= 3 and clock.elapsed < 300
    detail = ", ".join(f"{db} dB {r:.2%}" for db, r in rel.items())
    record(7, ok, "CR-NOMA AoI MC vs closed form",
           f"{detail} (<=2%), per-frame max |z| {worst_z:.2f} (<=3), {clock.elapsed:.1f}s (<300s)")
    assert ok


def test_ac08_aoi_qualitative_claims():
    clock = Clock()
    grid = np.arange(0, 30.5, 0.5)
    with clock:
        gain = {}
        below = True
        for rate in (0.5, 1):
            for M in (3, 8):
                g = []
                for db in grid:
                    params = SystemParams.from_db(rate, db, M, 8, 2.0)
                    c, t = aoi_crnoma(params).value_seconds, aoi_tdma(params)
                    below &= c <= t
                    g.append(1 - c / t)
                gain[rate, M] = np.array(g)
    rate_order = all(bool(np.all(gain[0.5, M] > gain[1, M])) for M in (3, 8))
    more_users = {rate: gain[rate, 8] > gain[rate, 3] for rate in (0.5, 1)}
    users_ok = all(bool(np.all(v)) for v in more_users.values())
    reversals = {rate: grid[~v] for rate, v in more_users.items()}
    ok = below and rate_order and users_ok and clock.elapsed < 10
    detail = (
        f"crnoma<=tdma: {below}; gain(R=0.5)>gain(R=1): {rate_order}; gain(M=8)>gain(M=3): {users_ok}"
        + "".join(
            f" [R={r}: M=8 behind at {len(v)} points, {v.min():g}-{v.max():g} dB]"
            for r, v in reversals.items() if len(v)
        )
        + f"; {clock.elapsed:.2f}s (<10s)"
    )
    record(8, ok, "AoI qualitative claims", detail)
    assert below and rate_order
    assert users_ok, detail


def test_ac09_protocol_invariants():
    rng = np.random.default_rng(2024)
    clock = Clock()
    trials = 100_000
    cap_violations = isolation_violations = sic_violations = silent_seen = 0
    with clock:
        for _ in range(trials):
            rate = rng.choice((0.5, 1.0, 2.0))
            params = SystemParams.from_db(rate, rng.uniform(-5, 40), int(rng.integers(1, 11)))
            M = params.num_secondary
            h0 = rng.standard_exponential()
            gains = rng.standard_exponential(M)
            out = run_trial(params, h0, gains, rng.choice(("random", "greedy")), rng)
            levels = level_array(params.epsilon, np.arange(1, M + 1))
            budget = interference_budget(params, h0)
            active = sorted(lv for u, lv in out.assignments if u not in out.silent)
            powers = [levels[lv - 1] for lv in active]
            if powers and math.fsum(powers) > budget * (1 + 1e-12):
                cap_violations += 1
            # each non-silent level must clear eps against the active levels below it
            for i, lv in enumerate(active):
                if levels[lv - 1] / (1 + math.fsum(powers[:i])) < params.epsilon * (1 - 1e-12):
                    sic_violations += 1
            primary_ok, decoded = sic_decode(params, h0, out, levels)
            # a primary in outage (negative budget) fails with or without secondaries
            if (budget >= 0 and not primary_ok) or decoded != set(out.successes):
                sic_violations += 1
            for user in out.silent:
                silent_seen += 1
                reduced = ScheduleOutcome(
                    out.k_supported,
                    tuple(a for a in out.assignments if a[0] != user),
                    out.silent - {user},
                    out.successes,
                )
                if sic_decode(params, h0, reduced, levels) != (primary_ok, decoded):
                    isolation_violations += 1
    ok = cap_violations == isolation_violations == sic_violations == 0 and clock.elapsed < 60
    record(9, ok, "protocol invariants",
           f"{trials} trials: cap {cap_violations}, isolation {isolation_violations} "
           f"(over {silent_seen} silent users), SIC {sic_violations} violations; {clock.elapsed:.1f}s (<60s)")
    assert ok


def test_ac10_determinism(tmp_path):
    common = ["--seed", "3", "--users", "3"]
    commands = {
        "ladder": ["--kmax", "20"],
        "kdist": ["--snr-db", "0:30:10", "--trials", "120000"],
        "sumrate": ["--snr-db", "10", "--snr-db", "20", "--trials", "120000", "--scheduler", "greedy"],
        "aoi": ["--snr-db", "5:15:5", "--super-frames", "12000", "--format", "json"],
    }
    identical = {}
    for name, extra in commands.items():
        blobs = []
        for run, workers in enumerate(("1", "1", "3")):
            path = tmp_path / f"{name}-{run}.out"
            assert main([name, *common, *extra, "--workers", workers, "--out", str(path)]) == 0
            blobs.append(path.read_bytes())
        identical[name] = len(set(blobs)) == 1
    ok = all(identical.values())
    record(10, ok, "determinism",
           ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in identical.items())
           + " across reruns and workers 1/3")
    assert ok

"""Monte Carlo engine for CR-NOMA.

Every trial follows the protocol step by step: draw the primary gain, get
the interference budget and the supported-level count, draw the secondary
gains, schedule, and let users whose assigned level needs more than the
power budget stay silent.  A non-silent user is decoded successfully; the
ladder guarantees its SIC stage meets the target rate.

Trials are split into fixed-size chunks, each with its own random stream
derived from ``(seed, chunk index)``.  Chunks are merged in order, so the
result does not depend on how many worker processes ran them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ladder import count_supported, interference_budget, level_array

__all__ = [
    "RngStream",
    "Estimate",
    "ScheduleOutcome",
    "AoiTrace",
    "AoiSimulation",
    "InsufficientSuccessesError",
    "SCHEDULERS",
    "SCHEMES",
    "sample_channel",
    "assign_in_order",
    "schedule_random",
    "schedule_greedy",
    "run_trial",
    "sic_decode",
    "random_successes",
    "greedy_successes",
    "simulate_k",
    "simulate_sum_rate",
    "simulate_aoi",
]

SCHEDULERS = ("random", "greedy")
SCHEMES = ("tdma", "crnoma")

CHUNK_TRIALS = 50_000
CHUNK_SUPER_FRAMES = 5_000
JACKKNIFE_BLOCKS = 50
MIN_SUCCESSES = 100


class InsufficientSuccessesError(RuntimeError):
    pass


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(master_seed, stream_index)``."""

    master_seed: int
    stream_index: int = 0

    def generator(self):
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    trials: int

    def __str__(self):
        return f"{self.mean:.6g} +/- {self.std_error:.2g} ({self.trials} trials)"


def _estimate_from_sums(total, total_sq, n, scale=1.0):
    mean = total / n
    if n < 2:
        return Estimate(scale * mean, math.nan, n)
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return Estimate(scale * mean, scale * math.sqrt(var / n), n)


def sample_channel(rng, size=None):
    """Rayleigh-fading power gains ``|h|^2``: unit-mean exponential draws.

    ``rng`` is an :class:`RngStream` or a ``numpy.random.Generator``.
    """
    if isinstance(rng, RngStream):
        rng = rng.generator()
    return rng.standard_exponential(size)


def _map_chunks(fn, tasks, workers):
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _chunk_sizes(total, chunk):
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


# -- scheduling ---------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleOutcome:
    """Result of scheduling one slot.

    ``assignments`` pairs 0-based user ids with 1-based level indices;
    ``silent`` holds assigned users whose level exceeds their power budget.
    """

    k_supported: int
    assignments: tuple
    silent: frozenset
    successes: frozenset

    def active_levels(self):
        return sorted(level for user, level in self.assignments if user in self.successes)


def assign_in_order(order, k, gains, levels, snr):
    """Give level ``j`` to ``order[j-1]`` for ``j = 1..min(k, M)``.

    A user is silent when its required transmit SNR ``P_j / |h|^2``
    exceeds ``snr``.
    """
    gains = np.asarray(gains, dtype=float)
    count = min(int(k), len(gains))
    assignments = tuple((int(u), j + 1) for j, u in enumerate(order[:count]))
    silent = set()
    with np.errstate(divide="ignore"):
        for user, level in assignments:
            if levels[level - 1] / gains[user] > snr:
                silent.add(user)
    users = {u for u, _ in assignments}
    return ScheduleOutcome(int(k), assignments, frozenset(silent), frozenset(users - silent))


def schedule_random(k, gains, levels, snr, rng):
    """Assign levels to ``min(k, M)`` users drawn uniformly without replacement."""
    if isinstance(rng, RngStream):
        rng = rng.generator()
    order = rng.permutation(len(gains))
    return assign_in_order(order, k, gains, levels, snr)


def schedule_greedy(k, gains, levels, snr):
    """Pick the ``min(k, M)`` strongest users; the weakest of them gets ``P_1``.

    Ties in gain go to the lower user id, both for selection and for the
    level order.
    """
    gains = np.asarray(gains, dtype=float)
    ids = np.arange(len(gains))
    count = min(int(k), len(gains))
    strongest = np.lexsort((ids, -gains))[:count]
    order = strongest[np.lexsort((strongest, gains[strongest]))]
    return assign_in_order(order, k, gains, levels, snr)


def run_trial(params, h0, gains, scheduler="random", rng=None):
    """One CR-NOMA slot for given primary and secondary gains."""
    eps, snr = params.epsilon, params.snr_linear
    k = count_supported(eps, interference_budget(params, h0))
    levels = level_array(eps, np.arange(1, len(gains) + 1))
    if scheduler == "random":
        return schedule_random(k, gains, levels, snr, rng)
    if scheduler == "greedy":
        return schedule_greedy(k, gains, levels, snr)
    raise ValueError(f"scheduler must be one of {SCHEDULERS}, got {scheduler!r}")


def sic_decode(params, h0, outcome, levels, rtol=1e-9):
    """Replay the base station's SIC receiver for one scheduled slot.

    Non-silent users arrive at exactly their assigned level.  The primary is
    decoded first against all of them; secondary users follow from the
    highest level down, each seeing only the lower levels as interference.
    A stage succeeds when its SINR reaches ``eps`` up to ``rtol`` rounding.

    Returns ``(primary_ok, decoded)`` where ``decoded`` is the set of
    secondary user ids recovered.
    """
    eps, snr = params.epsilon, params.snr_linear
    threshold = eps * (1.0 - rtol)
    active = sorted(
        ((level, user) for user, level in outcome.assignments if user not in outcome.silent),
        reverse=True,
    )
    powers = [levels[level - 1] for level, _ in active]
    primary_ok = snr * h0 / (1.0 + math.fsum(powers)) >= threshold
    decoded = set()
    for i, (level, user) in enumerate(active):
        residual = math.fsum(powers[i + 1 :])
        if levels[level - 1] / (1.0 + residual) >= threshold:
            decoded.add(user)
    return primary_ok, decoded


def random_successes(k, gains, keys, levels, snr):
    """Batched random scheduling: successful users per row.

    Row ``i`` serves users in the order ``argsort(keys[i])``, which is a
    uniform random permutation for i.i.d. keys.
    """
    M = gains.shape[1]
    count = np.minimum(k, M)
    order = np.argsort(keys, axis=1, kind="stable")
    ordered = np.take_along_axis(gains, order, axis=1)
    with np.errstate(divide="ignore"):
        feasible = levels[:M][None, :] / ordered <= snr
    used = np.arange(M)[None, :] < count[:, None]
    return np.sum(feasible & used, axis=1)


def greedy_successes(k, gains, levels, snr):
    """Batched greedy scheduling: successful users per row."""
    M = gains.shape[1]
    count = np.minimum(k, M)
    ordered = np.sort(gains, axis=1)
    j = np.arange(M)[None, :]
    # level j+1 goes to the sorted position M - count + j
    pos = np.clip(M - count[:, None] + j, 0, M - 1)
    chosen = np.take_along_axis(ordered, pos, axis=1)
    with np.errstate(divide="ignore"):
        feasible = levels[:M][None, :] / chosen <= snr
    return np.sum(feasible & (j < count[:, None]), axis=1)


# -- supported-level count ----------------------------------------------------


def _k_chunk(params, n, seed, index):
    rng = RngStream(seed, index).generator()
    h0 = sample_channel(rng, n)
    k = count_supported(params.epsilon, interference_budget(params, h0))
    return np.bincount(k)


def simulate_k(params, trials, seed=1, workers=1):
    """Empirical distribution and mean of the supported-level count.

    Returns ``(pmf, estimate)`` where ``pmf[n]`` is the fraction of trials
    with ``K = n``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tasks = [(params, n, seed, i) for i, n in enumerate(_chunk_sizes(trials, CHUNK_TRIALS))]
    parts = _map_chunks(_k_chunk, tasks, workers)
    counts = np.zeros(max(len(p) for p in parts), dtype=np.int64)
    for p in parts:
        counts[: len(p)] += p
    values = np.arange(len(counts))
    est = _estimate_from_sums(int(counts @ values), int(counts @ values**2), trials)
    return counts / trials, est


# -- sum-rate -----------------------------------------------------------------


def _sum_rate_chunk(params, n, seed, index):
    rng = RngStream(seed, index).generator()
    M = params.num_secondary
    eps, snr = params.epsilon, params.snr_linear
    h0 = sample_channel(rng, n)
    gains = sample_channel(rng, (n, M))
    keys = rng.random((n, M))
    k = count_supported(eps, interference_budget(params, h0))
    levels = level_array(eps, np.arange(1, M + 1))
    out = {}
    for name, wins in (
        ("random", random_successes(k, gains, keys, levels, snr)),
        ("greedy", greedy_successes(k, gains, levels, snr)),
    ):
        wins = wins.astype(np.int64)
        out[name] = (int(wins.sum()), int((wins * wins).sum()))
    return out


def simulate_sum_rate(params, scheduler="random", trials=1_000_000, seed=1, workers=1):
    """Monte Carlo secondary sum-rate in bits per channel use.

    Both schedulers see identical channel draws for a given seed, so their
    estimates are directly comparable.
    """
    if scheduler not in SCHEDULERS:
        raise ValueError(f"scheduler must be one of {SCHEDULERS}, got {scheduler!r}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tasks = [(params, n, seed, i) for i, n in enumerate(_chunk_sizes(trials, CHUNK_TRIALS))]
    parts = _map_chunks(_sum_rate_chunk, tasks, workers)
    total = sum(p[scheduler][0] for p in parts)
    total_sq = sum(p[scheduler][1] for p in parts)
    return _estimate_from_sums(total, total_sq, trials, scale=params.rate_bpcu)


# -- age of information -------------------------------------------------------


@dataclass(frozen=True)
class AoiTrace:
    """Inter-success intervals of the tagged user over the simulated horizon."""

    inter_success_intervals_seconds: np.ndarray
    horizon_seconds: float
    successes_count: int


@dataclass(frozen=True)
class AoiSimulation:
    """Monte Carlo AoI run.

    ``estimates`` maps ``"paper"`` to ``T + sum(y^2)/sum(y)`` and
    ``"trapezoid"`` to ``T + sum(y^2)/(2 sum(y))``; ``frame_successes[m-1]``
    counts successes in frame ``m`` of a super-frame.
    """

    trace: AoiTrace
    estimates: dict
    frame_successes: np.ndarray
    super_frames: int

    def frame_success_rates(self):
        return self.frame_successes / self.super_frames


def _aoi_chunk(params, scheme, n, seed, index):
    rng = RngStream(seed, index).generator()
    M = params.num_secondary
    eps, snr = params.epsilon, params.snr_linear
    L = M + 1
    wins = np.zeros((n, L), dtype=bool)
    # frame 1: the tagged user is the primary user
    wins[:, 0] = snr * sample_channel(rng, n) >= eps
    if scheme == "crnoma":
        for m in range(2, L + 1):
            j = M - m + 2
            primary = sample_channel(rng, n)
            tagged = sample_channel(rng, n)
            k = count_supported(eps, interference_budget(params, primary))
            with np.errstate(divide="ignore"):
                feasible = float(level_array(eps, j)) / tagged <= snr
            wins[:, m - 1] = (k >= j) & feasible
    frames = np.flatnonzero(wins.ravel()).astype(np.int64)
    return frames, wins.sum(axis=0)


def _jackknife_ratio(y, halve):
    """Block-jackknife standard error of ``sum(y^2) / sum(y)``."""
    blocks = min(JACKKNIFE_BLOCKS, len(y))
    if blocks < 2:
        return math.nan
    parts = np.array_split(y, blocks)
    s1 = np.array([p.sum() for p in parts], dtype=float)
    s2 = np.array([(p * p).sum() for p in parts], dtype=float)
    loo = (s2.sum() - s2) / (s1.sum() - s1)
    if halve:
        loo = loo / 2.0
    return float(math.sqrt((blocks - 1) / blocks * np.sum((loo - loo.mean()) ** 2)))


def simulate_aoi(params, scheme="crnoma", super_frames=100_000, seed=1, workers=1):
    """Simulate the tagged user ``U_1^1`` over ``super_frames`` super-frames.

    In frame 1 of each super-frame the tagged user is the primary user and
    succeeds iff ``P |h|^2 >= eps``.  Under ``crnoma``, in frame ``m >= 2``
    it holds level ``j = M - m + 2`` of that frame's primary user: it
    transmits iff ``K_m >= j`` and succeeds iff ``P_j / |h|^2 <= P``.
    Under ``tdma`` it only transmits in frame 1.

    Intervals are measured between consecutive successes; the partial
    intervals before the first and after the last success are dropped.

    Raises
    ------
    InsufficientSuccessesError
        With fewer than ``MIN_SUCCESSES`` successes.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if super_frames < 1:
        raise ValueError(f"super_frames must be >= 1, got {super_frames}")
    L = params.num_secondary + 1
    frame_seconds = params.slots_per_frame * params.slot_seconds
    sizes = _chunk_sizes(super_frames, CHUNK_SUPER_FRAMES)
    tasks = [(params, scheme, n, seed, i) for i, n in enumerate(sizes)]
    parts = _map_chunks(_aoi_chunk, tasks, workers)

    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])) * L
    frames = np.concatenate([f + off for (f, _), off in zip(parts, offsets)])
    per_frame = np.sum([c for _, c in parts], axis=0)
    if len(frames) < MIN_SUCCESSES:
        raise InsufficientSuccessesError(
            f"only {len(frames)} successes in {super_frames} super-frames; "
            f"need at least {MIN_SUCCESSES}"
        )
    gaps = np.diff(frames)
    trace = AoiTrace(gaps * frame_seconds, super_frames * L * frame_seconds, len(frames))

    T = params.slot_seconds
    s1, s2 = int(gaps.sum()), int((gaps * gaps).sum())
    ratio = frame_seconds * s2 / s1
    estimates = {
        "paper": Estimate(T + ratio, frame_seconds * _jackknife_ratio(gaps, False), len(gaps)),
        "trapezoid": Estimate(T + ratio / 2.0, frame_seconds * _jackknife_ratio(gaps, True), len(gaps)),
    }
    return AoiSimulation(trace, estimates, per_frame, super_frames)

"""Interference budget, receive-SNR ladder and supported-level count.

The base station decodes the primary user first, so the secondary users'
received power is interference to it.  With unit noise power the primary
tolerates at most ``I = P |h0|^2 / eps - 1`` where ``eps = 2**R - 1``.
Secondary users are decoded afterwards by SIC on a fixed ladder of receive
SNR levels

    P_1 = eps,    P_k = eps * (1 + P_1 + ... + P_{k-1}),

which solves to ``P_k = eps (1 + eps)**(k-1)`` with prefix sums
``eta_n = (1 + eps)**n - 1``.  Levels grow geometrically, so everything here
is evaluated through the closed forms; overflow maps to ``inf``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemParams",
    "SnrLadder",
    "LadderOverflowError",
    "db_to_linear",
    "epsilon",
    "interference_budget",
    "build_ladder",
    "max_safe_kmax",
    "closed_form_level",
    "eta_closed_form",
    "level_array",
    "eta_array",
    "count_supported",
    "supported_levels",
]

_LOG_MAX = math.log(sys.float_info.max)


class LadderOverflowError(ValueError):
    """Requested ladder depth leaves the floating point range."""

    def __init__(self, kmax, max_kmax):
        super().__init__(
            f"kmax={kmax} overflows double precision; largest safe kmax is {max_kmax}"
        )
        self.kmax = kmax
        self.max_kmax = max_kmax


def db_to_linear(snr_db):
    """Convert an SNR in dB to a linear power ratio, ``10**(snr_db/10)``."""
    if np.ndim(snr_db):
        return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    return 10.0 ** (float(snr_db) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Scalar parameters shared by the analysis and the simulator.

    Parameters
    ----------
    rate_bpcu : float
        Common target rate ``R`` of primary and secondary users, bits per
        channel use.
    snr_linear : float
        Transmit SNR ``P`` (noise power normalised to one).
    num_secondary : int
        Number of secondary users ``M``.
    slots_per_frame : int
        TDMA slots per frame ``N``.
    slot_seconds : float
        Slot duration ``T`` in seconds.
    """

    rate_bpcu: float
    snr_linear: float
    num_secondary: int = 1
    slots_per_frame: int = 1
    slot_seconds: float = 1.0

    def __post_init__(self):
        if not (self.rate_bpcu > 0 and math.isfinite(self.rate_bpcu)):
            raise ValueError(f"rate_bpcu must be positive and finite, got {self.rate_bpcu}")
        if not (self.snr_linear > 0 and math.isfinite(self.snr_linear)):
            raise ValueError(f"snr_linear must be positive and finite, got {self.snr_linear}")
        for name in ("num_secondary", "slots_per_frame"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value}")
            object.__setattr__(self, name, int(value))
        if not (self.slot_seconds > 0 and math.isfinite(self.slot_seconds)):
            raise ValueError(f"slot_seconds must be positive and finite, got {self.slot_seconds}")
        if not self.epsilon > 0:
            raise ValueError(f"rate_bpcu={self.rate_bpcu} is too small: 2**R - 1 underflows")

    @classmethod
    def from_db(cls, rate_bpcu, snr_db, *args, **kwargs):
        return cls(rate_bpcu, db_to_linear(snr_db), *args, **kwargs)

    @property
    def epsilon(self):
        if self.rate_bpcu >= 0.5:
            # exact for integer rates
            return 2.0 ** self.rate_bpcu - 1.0
        return math.expm1(self.rate_bpcu * math.log(2.0))

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.snr_linear)

    def replace(self, **changes):
        values = dict(
            rate_bpcu=self.rate_bpcu,
            snr_linear=self.snr_linear,
            num_secondary=self.num_secondary,
            slots_per_frame=self.slots_per_frame,
            slot_seconds=self.slot_seconds,
        )
        values.update(changes)
        return SystemParams(**values)


def epsilon(params):
    """SINR threshold ``2**R - 1`` matching the target rate."""
    return params.epsilon


def interference_budget(params, h0):
    """Largest secondary receive power the primary user tolerates.

    ``h0`` is the primary's channel power gain ``|h0|^2`` (scalar or array).
    The result is negative when the primary cannot even meet its own rate.
    """
    if np.ndim(h0):
        h0 = np.asarray(h0, dtype=float)
    else:
        h0 = float(h0)
    return params.snr_linear * h0 / params.epsilon - 1.0


def _two_sum_one(eps):
    # 1 + eps = s + err exactly (Knuth TwoSum)
    s = 1.0 + eps
    bb = s - eps
    err = (1.0 - bb) + (eps - (s - bb))
    return s, err


def _growth(eps, n):
    """``(1 + eps)**n`` for integer array ``n`` with the rounding of ``1 + eps`` undone."""
    s, err = _two_sum_one(eps)
    n = np.asarray(n, dtype=float)
    with np.errstate(over="ignore"):
        return np.power(s, n) * np.exp(n * math.log1p(err / s))


def level_array(eps, k):
    """Vectorised ``eps (1 + eps)**(k-1)`` for integer ``k >= 1``."""
    k = np.asarray(k)
    with np.errstate(over="ignore"):
        return eps * _growth(eps, k - 1)


def eta_array(eps, n):
    """Vectorised prefix sum ``eta_n = (1 + eps)**n - 1`` for integer ``n >= 0``."""
    n = np.asarray(n)
    x = n * math.log1p(eps)
    with np.errstate(over="ignore", invalid="ignore"):
        # expm1 keeps relative accuracy while the growth is still close to 1
        small = np.expm1(np.minimum(x, 1.0))
        large = _growth(eps, n) - 1.0
    return np.where(n == 1, eps, np.where(x <= 1.0, small, large))


def closed_form_level(eps, k):
    """Receive-SNR level ``P_k = eps (1 + eps)**(k-1)``; ``inf`` past the float range."""
    if k < 1:
        raise ValueError(f"level index must be >= 1, got {k}")
    return float(level_array(eps, k))


def eta_closed_form(eps, n):
    """Prefix sum ``eta_n = P_1 + ... + P_n = (1 + eps)**n - 1`` (``eta_0 = 0``)."""
    if n < 0:
        raise ValueError(f"prefix index must be >= 0, got {n}")
    return float(eta_array(eps, n))


def max_safe_kmax(eps):
    """Largest ladder depth whose levels and prefix sums stay finite."""
    k = int(_LOG_MAX / math.log1p(eps))
    while k > 1 and not math.isfinite(eta_closed_form(eps, k)):
        k -= 1
    while math.isfinite(eta_closed_form(eps, k + 1)):
        k += 1
    return k


@dataclass(frozen=True)
class SnrLadder:
    """Preconfigured receive-SNR levels ``P_1 < P_2 < ...`` and their prefix sums.

    ``levels[k-1]`` holds ``P_k`` and ``prefix[n-1]`` holds ``eta_n``.
    """

    levels: np.ndarray
    prefix: np.ndarray
    epsilon: float
    kmax: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kmax", len(self.levels))

    def level(self, k):
        return float(self.levels[k - 1])

    def eta(self, n):
        return 0.0 if n == 0 else float(self.prefix[n - 1])


def build_ladder(params, kmax):
    """Build the first ``kmax`` SNR levels for ``params``.

    Raises
    ------
    LadderOverflowError
        If ``P_kmax`` or ``eta_kmax`` is not representable as a double.
    """
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    eps = params.epsilon
    k = np.arange(1, kmax + 1)
    levels = level_array(eps, k)
    prefix = eta_array(eps, k)
    if not (np.isfinite(prefix[-1]) and np.isfinite(levels[-1])):
        raise LadderOverflowError(kmax, max_safe_kmax(eps))
    levels.setflags(write=False)
    prefix.setflags(write=False)
    return SnrLadder(levels, prefix, eps)


def count_supported(eps, budget):
    """Number of ladder levels ``K = max{n : eta_n <= I}`` for budgets ``I``.

    Works elementwise on arrays.  ``K = 0`` whenever ``I < eta_1 = eps``,
    which covers every negative budget.  The logarithmic estimate
    ``floor(log(1 + I) / log(1 + eps))`` is corrected by one step in either
    direction against the closed-form prefix sums, so ties ``I = eta_n``
    resolve to ``K = n``.
    """
    budget = np.asarray(budget, dtype=float)
    scalar = budget.ndim == 0
    budget = np.atleast_1d(budget)
    ok = budget >= eps
    with np.errstate(invalid="ignore", divide="ignore"):
        guess = np.floor(np.log1p(np.where(ok, budget, 0.0)) / math.log1p(eps))
    k = np.where(ok, np.maximum(guess, 1), 0).astype(np.int64)
    up = ok & (eta_array(eps, k + 1) <= budget)
    k = k + up
    down = ok & ~up & (eta_array(eps, k) > budget)
    k = np.where(ok, np.maximum(k - down, 1), 0)
    return int(k[0]) if scalar else k


def supported_levels(params, h0):
    """Supported-level count ``K`` for primary channel gain ``h0``."""
    return count_supported(params.epsilon, interference_budget(params, h0))

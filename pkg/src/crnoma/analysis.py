"""Closed-form statistics of the supported-level count, the secondary
sum-rate and the average AoI of a TDMA user with and without CR-NOMA.

All infinite series are summed in closed form:

* ``P(K >= j) = exp(-eps (1 + eta_j) / P)`` telescopes every tail of the
  ``K`` distribution;
* the super-frame count between two successes is geometric, so the
  ``q``-series of the AoI moments reduce to ``sum r^q``, ``sum q r^q`` and
  ``sum q^2 r^q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ladder import count_supported, eta_array, level_array, max_safe_kmax

__all__ = [
    "KPmf",
    "AoiClosedForm",
    "CONVENTIONS",
    "survival",
    "k_pmf",
    "k_mean",
    "sum_rate_closed_form",
    "sum_rate_direct",
    "phi_vector",
    "psi",
    "aoi_tdma",
    "aoi_crnoma",
]

CONVENTIONS = ("paper", "trapezoid")


def _check_tol(tol):
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")


def survival(params, j):
    """``P(K >= j)`` for integer ``j`` (scalar or array); equals 1 at ``j = 0``."""
    eps, snr = params.epsilon, params.snr_linear
    j = np.asarray(j)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(-eps * (1.0 + eta_array(eps, j)) / snr)
    out = np.where(j <= 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KPmf:
    """Distribution of the supported-level count ``K``.

    ``probs[n]`` is ``P(K = n)`` for ``0 <= n <= truncation_index``;
    ``tail_mass`` is ``P(K > truncation_index)``.
    """

    probs: np.ndarray
    tail_mass: float
    truncation_index: int

    def total(self):
        return math.fsum(self.probs) + self.tail_mass

    def mean(self):
        """Mean over the truncated support (excludes the tail)."""
        return math.fsum(np.arange(len(self.probs)) * self.probs)

    def mean_tail_bound(self, params):
        """Upper bound on ``E[K; K > n]`` for the truncation index ``n``.

        With ``S_j = P(K >= j)`` the missing mass is
        ``(n+1) S_{n+1} + sum_{j >= n+2} S_j``.  Successive ratios
        ``S_{j+1}/S_j = exp(-eps P_{j+1} / P)`` shrink with ``j``, so the
        sum is dominated by a geometric series with ratio
        ``rho = exp(-eps P_{n+2} / P)``.
        """
        n = self.truncation_index
        eps = params.epsilon
        rho = math.exp(-eps * float(level_array(eps, n + 2)) / params.snr_linear)
        return self.tail_mass * ((n + 1) + rho / (1.0 - rho))


def _truncation_index(params, tol):
    # smallest n with S_{n+1} < tol, i.e. eta_{n+1} > -P ln(tol)/eps - 1
    eps = params.epsilon
    threshold = -params.snr_linear * math.log(tol) / eps - 1.0
    n = max(count_supported(eps, threshold), 1)
    if n + 1 > max_safe_kmax(eps):
        raise ValueError(f"tol={tol} unreachable within double range for {params}")
    return n


def k_pmf(params, tol=1e-15):
    """Analytic distribution of the number of supported SNR levels."""
    _check_tol(tol)
    eps, snr = params.epsilon, params.snr_linear
    n = _truncation_index(params, tol)
    j = np.arange(0, n + 1)
    head = survival(params, j)
    # P(K = j) = S_j (1 - exp(-eps P_{j+1} / P)), with P_1 = eps and S_0 = 1
    gap = eps * level_array(eps, j + 1) / snr
    gap[0] = eps * (1.0 + eps) / snr
    probs = head * -np.expm1(-gap)
    tail = float(survival(params, n + 1))
    probs.setflags(write=False)
    return KPmf(probs, tail, n)


def k_mean(params, tol=1e-15):
    """Mean number of supported SNR levels, truncated at ``tol`` tail mass.

    The neglected part is bounded by :meth:`KPmf.mean_tail_bound`.
    """
    return k_pmf(params, tol).mean()


def _feasible_prob(params, count):
    # e^{-P_k/P}: a random unit-mean exponential gain can reach level k
    eps = params.epsilon
    with np.errstate(over="ignore"):
        return np.exp(-level_array(eps, np.arange(1, count + 1)) / params.snr_linear)


def sum_rate_closed_form(params, tol=1e-15):
    """Secondary outage sum-rate under random scheduling, bits per channel use.

    The outer tail ``sum_{n >= M} P(K = n)`` telescopes to ``P(K >= M)``.
    ``tol`` is accepted for symmetry with :func:`sum_rate_direct`; the
    closed form needs no truncation.
    """
    _check_tol(tol)
    M, R = params.num_secondary, params.rate_bpcu
    eps, snr = params.epsilon, params.snr_linear
    feasible = np.cumsum(_feasible_prob(params, M))
    n = np.arange(1, M)
    with np.errstate(over="ignore", invalid="ignore"):
        p_n = survival(params, n) * -np.expm1(-eps * level_array(eps, n + 1) / snr)
    head = math.fsum(p_n * feasible[:-1]) if M > 1 else 0.0
    tail = float(survival(params, M)) * feasible[-1]
    return R * (head + tail)


def sum_rate_direct(params, tol=1e-15):
    """Sum-rate with the ``n >= M`` series summed term by term up to the
    truncation index of :func:`k_pmf`.  Reference route for the closed form."""
    pmf = k_pmf(params, tol)
    M, R = params.num_secondary, params.rate_bpcu
    feasible = np.cumsum(_feasible_prob(params, M))
    terms = [pmf.probs[n] * feasible[min(n, M) - 1] for n in range(1, len(pmf.probs))]
    return R * math.fsum(terms)


def phi_vector(params):
    """Per-frame success probabilities of the tagged user in one super-frame.

    Entry ``m - 1`` holds ``phi_m``.  Frame 1: the tagged user is primary and
    succeeds with ``exp(-eps/P)``.  Frame ``m >= 2``: it holds level
    ``j = M - m + 2``, which needs ``K_m >= j`` at that frame's primary and
    a gain reaching ``P_j``:
    ``phi_m = exp(-eps (1 + eta_j)/P) * exp(-P_j/P)``.
    """
    M = params.num_secondary
    eps, snr = params.epsilon, params.snr_linear
    j = np.arange(M, 0, -1)
    with np.errstate(over="ignore", invalid="ignore"):
        rest = np.exp(-(eps * (1.0 + eta_array(eps, j)) + level_array(eps, j)) / snr)
    return np.concatenate(([math.exp(-eps / snr)], rest))


def psi(phi, m, n):
    """Probability of failing in every frame ``m..n`` (1-based, inclusive);
    the empty product for ``m > n`` is 1."""
    if m > n:
        return 1.0
    return float(np.prod(1.0 - np.asarray(phi)[m - 1 : n]))


def aoi_tdma(params, convention="paper"):
    """Average AoI of round-robin TDMA without NOMA.

    The tagged user transmits once per super-frame of ``M + 1`` frames and
    succeeds with ``p = exp(-eps/P)``.  ``paper`` gives
    ``T + (M+1) N T (2/p - 1)``; ``trapezoid`` halves the second term.
    """
    _check_convention(convention)
    T, N, M = params.slot_seconds, params.slots_per_frame, params.num_secondary
    spread = (M + 1) * N * T * (2.0 * math.exp(params.epsilon / params.snr_linear) - 1.0)
    if convention == "trapezoid":
        spread /= 2.0
    return T + spread


@dataclass(frozen=True)
class AoiClosedForm:
    value_seconds: float
    convention: str
    delta_y: float
    delta_y2: float


def aoi_crnoma(params, tol=1e-12, convention="paper"):
    """Average AoI of the tagged user when CR-NOMA is added to TDMA.

    ``delta_y`` and ``delta_y2`` are the first and second moments of the
    interval between successive updates, weighted by the (unnormalised)
    frequency ``phi_m`` of a success in frame ``m``.  The interval from a
    success in frame ``m`` to the next one in frame ``n`` after ``q`` full
    failed super-frames lasts ``[(q+1)(M+1) + n - m] N T``; when ``n > m``
    in the same super-frame it lasts ``(n - m) N T``.

    ``paper`` returns ``T + delta_y2 / delta_y``, ``trapezoid`` returns
    ``T + delta_y2 / (2 delta_y)``.
    """
    _check_tol(tol)
    _check_convention(convention)
    T, N, M = params.slot_seconds, params.slots_per_frame, params.num_secondary
    L = M + 1
    phi = phi_vector(params)
    fail = 1.0 - phi
    with np.errstate(divide="ignore"):
        u = -math.expm1(float(np.sum(np.log1p(-phi))))
    r = 1.0 - u
    if not u > 0:
        raise ArithmeticError(f"super-frame failure probability r={r} >= 1: AoI diverges")
    # phi_m <= u, so scaling by u keeps the q-series terms
    # sum r^q = 1/u, sum q r^q = r/u^2, sum q^2 r^q = r(1+r)/u^3 in range
    scaled = phi / u

    # failure products psi_{m+1}^{L} and psi_1^{n-1}
    after = np.array([np.prod(fail[m:]) for m in range(1, L + 1)])
    before = np.array([np.prod(fail[: n - 1]) for n in range(1, L + 1)])
    m_idx = np.arange(1, L + 1)[:, None]
    n_idx = np.arange(1, L + 1)[None, :]
    wrap = scaled[:, None] * scaled[None, :] * after[:, None] * before[None, :]
    c = L + n_idx - m_idx
    first = math.fsum((wrap * (L * r + c * u)).ravel())
    second = math.fsum((wrap * (L * L * r * (1.0 + r) / u + 2 * L * c * r + c * c * u)).ravel())

    for m in range(1, L):
        run = 1.0
        for n in range(m + 1, L + 1):
            w = phi[m - 1] * phi[n - 1] * run
            first += (n - m) * w
            second += (n - m) ** 2 * w
            run *= fail[n - 1]

    delta_y = float(first) * N * T
    delta_y2 = float(second) * (N * T) ** 2
    ratio = delta_y2 / delta_y
    if convention == "trapezoid":
        ratio /= 2.0
    return AoiClosedForm(T + ratio, convention, delta_y, delta_y2)

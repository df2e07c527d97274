"""Multi-user CR-NOMA: SNR ladder, supported-user statistics, outage
sum-rate and age of information as a TDMA add-on, with closed forms and a
matching Monte Carlo engine."""

from .ladder import (
    LadderOverflowError,
    SnrLadder,
    SystemParams,
    build_ladder,
    closed_form_level,
    count_supported,
    db_to_linear,
    epsilon,
    eta_closed_form,
    interference_budget,
    supported_levels,
)
from .analysis import (
    AoiClosedForm,
    KPmf,
    aoi_crnoma,
    aoi_tdma,
    k_mean,
    k_pmf,
    phi_vector,
    psi,
    sum_rate_closed_form,
)
from .simulate import (
    Estimate,
    RngStream,
    ScheduleOutcome,
    schedule_greedy,
    schedule_random,
    simulate_aoi,
    simulate_k,
    simulate_sum_rate,
)

__version__ = "0.1.0"

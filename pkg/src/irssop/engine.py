"""Monte-Carlo estimation of secrecy outage and SNR statistics.

Trials are grouped in fixed blocks of `BLOCK_SIZE`. Block `b` draws everything
from `SeedSequence([seed, b])`, so an estimate depends only on (seed, trials,
parameters) and never on how blocks are spread over workers. Blocks are
evaluated vectorized, in parallel through joblib, and reduced in block order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, TypeVar

import joblib
import numpy as np

from irssop.channel import sample_realization
from irssop.config import McConfig
from irssop.constants import (
    EMPIRICAL_CDF_POINTS,
    PARALLEL_MODE_TO_RETURN_AS,
    SUPPORTS_RETURN_AS,
    SelectionMode,
    Side,
)
from irssop.transceiver import (
    IrsConfig,
    ess_select,
    full_selection,
    instant_snr_bob,
    instant_snr_eve,
    irs_optimal_phases,
    random_select,
    secrecy_capacity,
)
from irssop.utils import block_layout, make_block_streams

if TYPE_CHECKING:
    from irssop.config import SystemParams
    from irssop.transceiver import Scenario

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class McEstimate:
    """Frequency estimate of an outage probability."""

    p_hat: float
    std_err: float
    trials: int
    outages: int

    @classmethod
    def from_counts(cls, outages: int, trials: int) -> McEstimate:
        if not 0 <= outages <= trials:
            raise ValueError(f"Need 0 <= outages <= trials, got {outages}/{trials}.")
        p_hat = outages / trials
        return cls(
            p_hat=p_hat,
            std_err=math.sqrt(p_hat * (1 - p_hat) / trials),
            trials=trials,
            outages=outages,
        )


@dataclass(frozen=True)
class SnrStats:
    """Sample statistics of one side's instantaneous SNR."""

    mean: float
    variance: float
    std_err: float
    """Standard error of `mean`."""
    cdf_x: np.ndarray
    cdf_y: np.ndarray
    """Empirical CDF evaluated on `cdf_x`, 100 points between the 0.5% and 99.5%
    sample quantiles."""
    samples: np.ndarray


def _simulate_block(
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
    selection: SelectionMode,
    seed: int,
    block_index: int,
    n_trials: int,
) -> tuple[np.ndarray, np.ndarray]:
    streams = make_block_streams(seed, block_index)
    realization = sample_realization(params, streams.channel, size=(n_trials,))
    N = params.N
    if K is None or selection == "all":
        chosen = full_selection(N, (n_trials,))
    elif selection == "ess":
        chosen = ess_select(realization.h_B_hat, K)
    elif selection == "random":
        chosen = random_select(N, K, streams.selection, (n_trials,))
    else:
        raise ValueError(f"Unknown selection mode {selection!r}.")
    irs = IrsConfig(
        phases=irs_optimal_phases(realization.h_B_hat, realization.b),
        selection=chosen,
    )
    gamma_B = instant_snr_bob(realization, irs, params, scenario.bob_csi)
    gamma_E = instant_snr_eve(realization, irs, params, scenario.eve_csi)
    return gamma_B, gamma_E


def _map_blocks(
    func: Callable[[int, int], T],
    trials: int,
    mc: McConfig,
) -> list[T]:
    """Evaluate `func(block_index, n_trials)` for every block, in block order."""
    layout = block_layout(trials)
    n_jobs = 1 if len(layout) == 1 else mc.n_jobs
    if SUPPORTS_RETURN_AS:
        executor = joblib.Parallel(
            n_jobs=n_jobs,
            return_as=PARALLEL_MODE_TO_RETURN_AS["in-order"],
        )
    else:
        executor = joblib.Parallel(n_jobs=n_jobs)
    results = executor(joblib.delayed(func)(b, n) for b, n in layout)
    return list(results)


def _check_k(params: SystemParams, K: int | None) -> None:
    if K is not None and not 1 <= K <= params.N:
        raise ValueError(f"`K` must lie in [1, {params.N}], got {K}.")


def _count_outages(
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
    selection: SelectionMode,
    seed: int,
    block_index: int,
    n_trials: int,
) -> int:
    gamma_B, gamma_E = _simulate_block(
        params, scenario, K, selection, seed, block_index, n_trials
    )
    return int(np.count_nonzero(secrecy_capacity(gamma_B, gamma_E) <= params.Rs))


def estimate_sop(
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
    mc: McConfig | dict | None = None,
    *,
    selection: SelectionMode = "ess",
) -> McEstimate:
    """Monte-Carlo secrecy outage probability.

    Args:
        params: System parameters.
        scenario: CSI used by Bob and Eve.
        K: Number of active elements. `None` switches all N on.
        mc: Trials, seed and workers.
        selection: How the K elements are chosen: "ess" keeps the strongest
            outdated Bob channels, "random" draws a uniform subset per trial.

    Returns:
        The fraction of trials with C_s <= Rs and its binomial standard error.
    """
    mc = McConfig.from_user_input(mc)
    _check_k(params, K)
    logger.info(
        f"Simulating SOP: scenario={scenario.label}, N={params.N}, K={K}, "
        f"selection={selection}, trials={mc.trials}"
    )

    def run(block_index: int, n_trials: int) -> int:
        return _count_outages(
            params, scenario, K, selection, mc.seed, block_index, n_trials
        )

    outages = sum(_map_blocks(run, mc.trials, mc))
    estimate = McEstimate.from_counts(outages, mc.trials)
    logger.debug(f"{estimate}")
    return estimate


def estimate_snr_stats(
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
    side: Side,
    mc: McConfig | dict | None = None,
    *,
    selection: SelectionMode = "ess",
) -> SnrStats:
    """Sample mean, variance and empirical CDF of Bob's or Eve's SNR."""
    mc = McConfig.from_user_input(mc)
    _check_k(params, K)
    if side not in ("bob", "eve"):
        raise ValueError(f"`side` must be 'bob' or 'eve', got {side!r}.")
    index = 0 if side == "bob" else 1

    def run(block_index: int, n_trials: int) -> np.ndarray:
        return _simulate_block(
            params, scenario, K, selection, mc.seed, block_index, n_trials
        )[index]

    samples = np.concatenate(_map_blocks(run, mc.trials, mc))
    n = samples.size
    variance = float(samples.var(ddof=1)) if n > 1 else 0.0
    cdf_x = np.quantile(samples, np.linspace(0.005, 0.995, EMPIRICAL_CDF_POINTS))
    cdf_y = np.searchsorted(np.sort(samples), cdf_x, side="right") / n
    return SnrStats(
        mean=float(samples.mean()),
        variance=variance,
        std_err=math.sqrt(variance / n),
        cdf_x=cdf_x,
        cdf_y=cdf_y,
        samples=samples,
    )

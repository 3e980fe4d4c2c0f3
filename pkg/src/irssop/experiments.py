"""Experiment families: single points, sweeps over K and N, optimal K, validation.

Each `run_*` function turns an `ExperimentSpec` into a `pandas.DataFrame`;
`write_results` stores it together with a metadata sidecar.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np
import pandas as pd
from scipy import stats

from irssop.analytics import (
    ExpParams,
    GammaParams,
    bob_snr_params,
    eve_snr_params,
    optimal_k,
    sop_exact,
    sop_lower_bound,
    sop_series_meijerg,
)
from irssop.channel import sample_realization
from irssop.config import emit_config
from irssop.engine import estimate_snr_stats, estimate_sop
from irssop.errors import NumericalError
from irssop.misc.debug_versions import get_env_info
from irssop.transceiver import (
    IrsConfig,
    ess_select,
    full_selection,
    instant_snr_bob,
    instant_snr_eve,
    irs_optimal_phases,
    scenario_from_id,
    signal_chain_snr_bob,
    signal_chain_snr_eve,
)
from irssop.utils import write_table

if TYPE_CHECKING:
    from irssop.config import ExperimentSpec, SystemParams
    from irssop.constants import ExperimentKind
    from irssop.transceiver import Scenario

logger = logging.getLogger(__name__)

SWEEP_K_COLUMNS = [
    "scenario",
    "K",
    "sop_analytic",
    "sop_lower",
    "sop_mc",
    "sop_mc_se",
    "sop_mc_random_ess",
    "trials",
    "seed",
]


def eve_ks_tolerance(n: int) -> float:
    """KS bound on Eve's SNR law over `n` samples.

    0.01, widened to the 1% critical value 1.63/sqrt(n) for small `n`.
    """
    return max(0.01, 1.63 / math.sqrt(n))


@dataclass(frozen=True)
class SopPoint:
    """One row of a sweep."""

    x: int
    """The swept quantity, K or N."""
    scenario: str
    sop_analytic: float
    sop_lower: float
    sop_mc: float
    sop_mc_se: float
    k_used: int


def _analytic_pair(
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
) -> tuple[float, float]:
    bob = bob_snr_params(params, scenario.bob_csi, K)
    eve = eve_snr_params(params, scenario.eve_csi, K)
    return sop_exact(bob, eve, params.Rs), sop_lower_bound(bob, eve, params.Rs)


def _mc_pair(
    spec: ExperimentSpec,
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
) -> tuple[float, float]:
    if not spec.run_mc:
        return math.nan, math.nan
    estimate = estimate_sop(params, scenario, K, spec.mc)
    return estimate.p_hat, estimate.std_err


def sop_point(
    spec: ExperimentSpec,
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
    x: int,
) -> SopPoint:
    """Analytic, lower-bound and simulated SOP at one configuration."""
    analytic, lower = _analytic_pair(params, scenario, K)
    mc, mc_se = _mc_pair(spec, params, scenario, K)
    return SopPoint(
        x=x,
        scenario=scenario.label,
        sop_analytic=analytic,
        sop_lower=lower,
        sop_mc=mc,
        sop_mc_se=mc_se,
        k_used=params.N if K is None else K,
    )


def run_sop_point(spec: ExperimentSpec) -> pd.DataFrame:
    """SOP of every scenario at `spec.K` selected elements (all when unset).

    The Meijer-G series is reported next to the quadrature; it is NaN, with a
    warning in the log, where the series cannot be trusted.
    """
    params = spec.system
    rows = []
    for scenario_id in spec.scenarios:
        scenario = scenario_from_id(scenario_id)
        point = sop_point(spec, params, scenario, spec.K, x=spec.K or params.N)
        bob = bob_snr_params(params, scenario.bob_csi, spec.K)
        eve = eve_snr_params(params, scenario.eve_csi, spec.K)
        try:
            series = sop_series_meijerg(bob, eve, params.Rs)
        except NumericalError as e:
            logger.warning(f"Scenario {scenario_id}: Meijer-G series skipped: {e}")
            series = math.nan
        rows.append(
            {
                "scenario": point.scenario,
                "K": point.k_used,
                "kappa": bob.shape,
                "omega": bob.scale,
                "lambda": eve.mean,
                "sop_analytic": point.sop_analytic,
                "sop_series": series,
                "sop_lower": point.sop_lower,
                "sop_mc": point.sop_mc,
                "sop_mc_se": point.sop_mc_se,
                "trials": spec.mc.trials if spec.run_mc else 0,
                "seed": spec.mc.seed,
            }
        )
    return pd.DataFrame(rows)


def run_sweep_k(spec: ExperimentSpec) -> pd.DataFrame:
    """SOP against the number of selected elements, with a random-subset baseline.

    Every grid point reuses `spec.mc.seed`, so neighbouring points and the two
    selection rules share their channel draws.
    """
    params = spec.system
    rows = []
    for scenario_id in sorted(spec.scenarios):
        scenario = scenario_from_id(scenario_id)
        for K in sorted(spec.k_grid):
            point = sop_point(spec, params, scenario, K, x=K)
            random_mc = math.nan
            if spec.run_mc and spec.random_ess:
                random_mc = estimate_sop(
                    params, scenario, K, spec.mc, selection="random"
                ).p_hat
            rows.append(
                {
                    "scenario": point.scenario,
                    "K": K,
                    "sop_analytic": point.sop_analytic,
                    "sop_lower": point.sop_lower,
                    "sop_mc": point.sop_mc,
                    "sop_mc_se": point.sop_mc_se,
                    "sop_mc_random_ess": random_mc,
                    "trials": spec.mc.trials if spec.run_mc else 0,
                    "seed": spec.mc.seed,
                }
            )
    return pd.DataFrame(rows, columns=SWEEP_K_COLUMNS)


def run_sweep_n(spec: ExperimentSpec) -> pd.DataFrame:
    """SOP against the IRS size, with all elements on and with the optimal subset.

    One row per (scenario, rho, selection, N); selection is "all" or "optimal".
    """
    rows = []
    for scenario_id in sorted(spec.scenarios):
        scenario = scenario_from_id(scenario_id)
        for rho in sorted(spec.rho_grid):
            for N in sorted(spec.n_grid):
                params = spec.system.with_elements(N).replace(rho=rho)
                k_opt, _ = optimal_k(params, scenario, spec.optimal_method)
                for selection, K in (("all", None), ("optimal", k_opt)):
                    point = sop_point(spec, params, scenario, K, x=N)
                    rows.append(
                        {
                            "scenario": point.scenario,
                            "rho": rho,
                            "N": N,
                            "selection": selection,
                            "K": point.k_used,
                            "sop_analytic": point.sop_analytic,
                            "sop_lower": point.sop_lower,
                            "sop_mc": point.sop_mc,
                            "sop_mc_se": point.sop_mc_se,
                            "trials": spec.mc.trials if spec.run_mc else 0,
                            "seed": spec.mc.seed,
                        }
                    )
    df = pd.DataFrame(rows)
    return df.sort_values(["scenario", "rho", "selection", "N"], kind="stable")


def run_optimal_k(spec: ExperimentSpec) -> pd.DataFrame:
    """Best selection size per scenario, found with the exact SOP and the bound.

    `sop_at_opt` is always the exact SOP at the K each method picks.
    """
    params = spec.system
    rows = []
    for scenario_id in sorted(spec.scenarios):
        scenario = scenario_from_id(scenario_id)
        sop_all, _ = _analytic_pair(params, scenario, None)
        for method in ("exact", "lower_bound"):
            k_opt, _ = optimal_k(params, scenario, method)
            sop_opt, _ = _analytic_pair(params, scenario, k_opt)
            mc, mc_se = _mc_pair(spec, params, scenario, k_opt)
            rows.append(
                {
                    "scenario": scenario.label,
                    "N": params.N,
                    "method": method,
                    "K_opt": k_opt,
                    "sop_at_opt": sop_opt,
                    "sop_without_ess": sop_all,
                    "sop_mc_at_opt": mc,
                    "sop_mc_se": mc_se,
                }
            )
    return pd.DataFrame(rows)


# ------------------------------------------------------------------ validation


@dataclass(frozen=True)
class Check:
    """One row of the validation report."""

    check: str
    scenario: str
    K: int
    observed: float
    predicted: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.observed - self.predicted) <= self.tolerance)


def _corrupted(bob: GammaParams, factor: float) -> GammaParams:
    return GammaParams(shape=bob.shape * factor, scale=bob.scale)


def _signal_chain_error(
    params: SystemParams,
    scenario: Scenario,
    K: int | None,
    seed: int,
    n_realizations: int = 200,
) -> float:
    """Largest relative gap between the rank-1 SNR formulas and the dense chain."""
    realization = sample_realization(params, seed, size=(n_realizations,))
    worst = 0.0
    for i in range(n_realizations):
        single = realization[i]
        phases = irs_optimal_phases(single.h_B_hat, single.b)
        chosen = full_selection(params.N) if K is None else ess_select(single.h_B_hat, K)
        irs = IrsConfig(phases=phases, selection=np.asarray(chosen))
        pairs = (
            (
                instant_snr_bob(single, irs, params, scenario.bob_csi),
                signal_chain_snr_bob(single, irs, params, scenario.bob_csi),
            ),
            (
                instant_snr_eve(single, irs, params, scenario.eve_csi),
                signal_chain_snr_eve(single, irs, params, scenario.eve_csi),
            ),
        )
        for simplified, dense in pairs:
            # Absolute gap where the SNR vanishes (rho = 0 with outdated CSI).
            worst = max(worst, abs(float(simplified) - dense) / (abs(dense) or 1.0))
    return worst


def _eve_ks_statistic(samples: np.ndarray, eve: ExpParams) -> float:
    if eve.is_point_mass:
        return float(np.mean(samples > 0))
    return float(stats.kstest(samples, "expon", args=(0.0, eve.mean)).statistic)


def validation_checks(spec: ExperimentSpec) -> list[Check]:
    """Compare simulated SNR statistics with the analytic laws, per scenario.

    Without selection Bob's mean must match within 3 standard errors and his
    variance within 5%; with selection of `spec.validate_K` elements the means
    must match within 3%. Eve's mean is checked the same way and her CDF with
    the Kolmogorov-Smirnov statistic.
    """
    params = spec.system
    mc = spec.mc
    checks: list[Check] = []
    for scenario_id in sorted(spec.scenarios):
        scenario = scenario_from_id(scenario_id)
        label = scenario.label
        for K in (None, spec.validate_K):
            k_used = params.N if K is None else K
            ess = K is not None and K < params.N
            bob_pred = _corrupted(
                bob_snr_params(params, scenario.bob_csi, K), spec.corrupt_kappa
            )
            eve_pred = eve_snr_params(params, scenario.eve_csi, K)
            bob = estimate_snr_stats(params, scenario, K, "bob", mc)
            eve = estimate_snr_stats(params, scenario, K, "eve", mc)

            if ess:
                checks.append(
                    Check("bob_mean", label, k_used, bob.mean, bob_pred.mean,
                          0.03 * bob_pred.mean)
                )
                checks.append(
                    Check("eve_mean", label, k_used, eve.mean, eve_pred.mean,
                          0.03 * eve_pred.mean)
                )
            else:
                checks.append(
                    Check("bob_mean", label, k_used, bob.mean, bob_pred.mean,
                          3 * bob.std_err)
                )
                checks.append(
                    Check("bob_variance", label, k_used, bob.variance,
                          bob_pred.variance, 0.05 * bob_pred.variance)
                )
                checks.append(
                    Check("eve_mean", label, k_used, eve.mean, eve_pred.mean,
                          3 * eve.std_err)
                )
            checks.append(
                Check("eve_ks", label, k_used,
                      _eve_ks_statistic(eve.samples, eve_pred), 0.0,
                      eve_ks_tolerance(eve.samples.size))
            )
            checks.append(
                Check("signal_chain", label, k_used,
                      _signal_chain_error(params, scenario, K, mc.seed), 0.0, 1e-9)
            )
    return checks


def run_validate_dist(spec: ExperimentSpec) -> pd.DataFrame:
    """Pass/fail table of the distribution checks, see `validation_checks`."""
    checks = validation_checks(spec)
    df = pd.DataFrame(
        [{**asdict(c), "passed": c.passed} for c in checks],
        columns=[
            "check",
            "scenario",
            "K",
            "observed",
            "predicted",
            "tolerance",
            "passed",
        ],
    )
    failed = int((~df["passed"]).sum())
    if failed:
        logger.warning(f"{failed} of {len(df)} distribution checks failed.")
    else:
        logger.info(f"All {len(df)} distribution checks passed.")
    return df


RUNNERS: dict[ExperimentKind, Callable[[ExperimentSpec], pd.DataFrame]] = {
    "sop-point": run_sop_point,
    "sweep-k": run_sweep_k,
    "sweep-n": run_sweep_n,
    "optimal-k": run_optimal_k,
    "validate-dist": run_validate_dist,
}


def run_experiment(spec: ExperimentSpec) -> pd.DataFrame:
    """Dispatch on `spec.kind`."""
    logger.info(f"Running {spec.kind} for scenarios {list(spec.scenarios)}")
    return RUNNERS[spec.kind](spec)


def metadata_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_results(spec: ExperimentSpec, table: pd.DataFrame) -> Path | None:
    """Write `table` where `spec.output` says, plus `<out>.meta.json`.

    The sidecar holds the seed, the resolved configuration and the environment,
    enough to regenerate the table bit for bit.

    Returns:
        The path of the result file, `None` when the table went to stdout.
    """
    path = spec.output.path
    if path is None:
        print(table.to_csv(index=False, float_format="%.12g"), end="")  # noqa: T201
        return None

    path = Path(path)
    write_table(table, path, spec.output.format)
    meta = {
        "kind": spec.kind,
        "seed": spec.mc.seed,
        "trials": spec.mc.trials,
        "config": emit_config(spec),
        "environment": get_env_info(),
    }
    metadata_path(path).write_text(json.dumps(meta, indent=2) + "\n")
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path


__all__ = [
    "RUNNERS",
    "SWEEP_K_COLUMNS",
    "Check",
    "SopPoint",
    "run_experiment",
    "run_optimal_k",
    "run_sop_point",
    "run_sweep_k",
    "run_sweep_n",
    "run_validate_dist",
    "validation_checks",
    "write_results",
]

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from irssop.config import ExperimentSpec, McConfig, OutputConfig, SystemParams
from irssop.experiments import (
    RUNNERS,
    SWEEP_K_COLUMNS,
    run_experiment,
    run_optimal_k,
    run_sop_point,
    run_sweep_k,
    run_sweep_n,
    run_validate_dist,
    write_results,
)

SMALL = SystemParams(N_H=4, N_V=4)
FAST_MC = McConfig(trials=600, seed=5, workers=1)


def test_every_kind_has_a_runner():
    assert set(RUNNERS) == {
        "sop-point",
        "sweep-k",
        "sweep-n",
        "optimal-k",
        "validate-dist",
    }


def test_sweep_k_table():
    spec = ExperimentSpec(
        kind="sweep-k", system=SMALL, k_grid=(16, 4, 8), scenarios=(3, 1), mc=FAST_MC
    )
    df = run_sweep_k(spec)
    assert list(df.columns) == SWEEP_K_COLUMNS
    assert len(df) == 6
    assert list(df["K"][:3]) == [4, 8, 16]
    assert list(df["scenario"].unique()) == ["1", "3"]
    assert df["sop_lower"].le(df["sop_analytic"] + 1e-12).all()
    assert df[["sop_mc", "sop_mc_random_ess"]].notna().all().all()
    assert (df["trials"] == 600).all()
    assert (df["seed"] == 5).all()

    # With every element on, both selection rules keep the same set.
    full = df[df["K"] == 16]
    np.testing.assert_allclose(full["sop_mc"], full["sop_mc_random_ess"])


def test_sweep_k_without_simulation():
    spec = ExperimentSpec(system=SMALL, k_grid=(4, 8), run_mc=False)
    df = run_sweep_k(spec)
    assert df["sop_mc"].isna().all()
    assert df["sop_mc_random_ess"].isna().all()
    assert (df["trials"] == 0).all()


def test_sweep_n_long_format():
    spec = ExperimentSpec(
        kind="sweep-n",
        n_grid=(4, 16, 36),
        rho_grid=(0.8, 0.9),
        run_mc=False,
    )
    df = run_sweep_n(spec)
    assert len(df) == 3 * 2 * 2
    assert set(df["selection"]) == {"all", "optimal"}

    for rho, group in df.groupby("rho"):
        all_on = group[group["selection"] == "all"].set_index("N")
        optimal = group[group["selection"] == "optimal"].set_index("N")
        assert (all_on["K"] == all_on.index).all()
        assert (optimal["sop_analytic"] <= all_on["sop_analytic"] + 1e-12).all()
        assert all_on["sop_analytic"].is_monotonic_decreasing, rho

    by_rho = df[df["selection"] == "all"].pivot(index="N", columns="rho",
                                                values="sop_analytic")
    assert (by_rho[0.8] >= by_rho[0.9]).all()


def test_sweep_n_with_fully_outdated_channel():
    spec = ExperimentSpec(
        kind="sweep-n",
        n_grid=(16,),
        rho_grid=(0.0,),
        scenarios=(1, 2, 3),
        mc=FAST_MC,
    )
    df = run_sweep_n(spec).set_index(["scenario", "selection"])
    assert len(df) == 6
    for scenario in ("1", "3"):
        outdated_bob = df.loc[scenario]
        assert (outdated_bob["sop_analytic"] == 1.0).all()
        assert (outdated_bob["sop_lower"] == 1.0).all()
        assert (outdated_bob["sop_mc"] == 1.0).all()
        assert outdated_bob.loc["optimal", "K"] == 1
    perfect = df.loc["2"]
    assert perfect["sop_analytic"].between(0, 1, inclusive="neither").all()


def test_validate_dist_with_fully_outdated_channel():
    spec = ExperimentSpec(
        kind="validate-dist",
        system=SystemParams(N_H=4, N_V=4, rho=0.0),
        scenarios=(1,),
        validate_K=4,
        mc=McConfig(trials=500, seed=2, workers=1),
    )
    df = run_validate_dist(spec)
    assert len(df) == 9
    assert df["passed"].all()
    assert (df["predicted"] == 0.0).all()

def test_optimal_k_table():
    spec = ExperimentSpec(kind="optimal-k", run_mc=False)
    df = run_optimal_k(spec)
    assert list(df["method"]) == ["exact", "lower_bound"]
    exact = df.iloc[0]
    assert exact["K_opt"] < 100
    assert exact["sop_at_opt"] < exact["sop_without_ess"]
    # The bound's choice cannot beat the exact optimum.
    assert df.iloc[1]["sop_at_opt"] >= exact["sop_at_opt"] - 1e-12


def test_sop_point_reports_series():
    spec = ExperimentSpec(kind="sop-point", K=None, run_mc=False)
    row = run_sop_point(spec).iloc[0]
    assert row["K"] == 100
    assert row["sop_series"] == pytest.approx(row["sop_analytic"], abs=1e-4)
    assert row["kappa"] * row["omega"] == pytest.approx(105, rel=0.05)


def test_sop_point_skips_invalid_series(caplog: pytest.LogCaptureFixture):
    spec = ExperimentSpec(
        kind="sop-point", system=SystemParams(N_H=2, N_V=2), run_mc=False
    )
    with caplog.at_level(logging.WARNING, logger="irssop.experiments"):
        df = run_sop_point(spec)
    assert math.isnan(df["sop_series"].iloc[0])
    assert "Meijer-G series skipped" in caplog.text


def test_sop_point_with_simulation():
    spec = ExperimentSpec(kind="sop-point", system=SMALL, K=8, mc=FAST_MC)
    row = run_sop_point(spec).iloc[0]
    assert row["trials"] == 600
    assert 0 <= row["sop_mc"] <= 1
    assert row["sop_mc_se"] == pytest.approx(
        math.sqrt(row["sop_mc"] * (1 - row["sop_mc"]) / 600)
    )


@pytest.fixture(scope="module")
def validation_spec() -> ExperimentSpec:
    return ExperimentSpec(
        kind="validate-dist",
        system=SMALL,
        scenarios=(3,),
        validate_K=4,
        mc=McConfig(trials=4000, seed=11, workers=1),
    )


def test_validate_dist_report(validation_spec: ExperimentSpec):
    df = run_validate_dist(validation_spec)
    assert list(df.columns) == [
        "check",
        "scenario",
        "K",
        "observed",
        "predicted",
        "tolerance",
        "passed",
    ]
    assert len(df) == 9
    assert set(df["K"]) == {4, 16}
    assert df[df["check"] == "signal_chain"]["passed"].all()
    assert df[df["check"] == "eve_ks"]["passed"].all()

    no_selection = df[df["K"] == 16].set_index("check")
    assert no_selection.loc["bob_mean", "passed"]
    assert no_selection.loc["eve_mean", "passed"]


def test_validate_dist_detects_wrong_shape(validation_spec: ExperimentSpec):
    df = run_validate_dist(validation_spec.replace(corrupt_kappa=2.0))
    bob = df[df["check"].isin(["bob_mean", "bob_variance"])]
    assert len(bob) == 3
    assert not bob["passed"].any()


def test_run_experiment_dispatches():
    spec = ExperimentSpec(kind="optimal-k", system=SMALL, run_mc=False)
    pd.testing.assert_frame_equal(run_experiment(spec), run_optimal_k(spec))


def test_write_results_with_sidecar(tmp_path: Path):
    out = tmp_path / "sweep.csv"
    spec = ExperimentSpec(
        system=SMALL,
        k_grid=(4, 8),
        run_mc=False,
        mc=McConfig(seed=17),
        output=OutputConfig(path=out),
    )
    df = run_sweep_k(spec)
    assert write_results(spec, df) == out

    loaded = pd.read_csv(out)
    assert list(loaded.columns) == SWEEP_K_COLUMNS
    np.testing.assert_allclose(loaded["sop_analytic"], df["sop_analytic"], rtol=1e-11)

    meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
    assert meta["seed"] == 17
    assert meta["kind"] == "sweep-k"
    assert "sweep.k_grid = 4,8" in meta["config"]
    assert "numpy" in meta["environment"]["dependencies"]


def test_write_results_to_stdout(capsys: pytest.CaptureFixture[str]):
    spec = ExperimentSpec(system=SMALL, k_grid=(4,), run_mc=False)
    assert write_results(spec, run_sweep_k(spec)) is None
    assert capsys.readouterr().out.startswith(",".join(SWEEP_K_COLUMNS))


def test_identical_seeds_give_identical_files(tmp_path: Path):
    tables = []
    for workers in (1, 2):
        out = tmp_path / f"run_{workers}.csv"
        spec = ExperimentSpec(
            system=SMALL,
            k_grid=(4, 8),
            random_ess=False,
            mc=McConfig(trials=5000, seed=3, workers=workers),
            output=OutputConfig(path=out),
        )
        write_results(spec, run_sweep_k(spec))
        tables.append(out.read_bytes())
    assert tables[0] == tables[1]

from __future__ import annotations

from pathlib import Path

import pytest

from irssop.channel import rho_from_doppler
from irssop.config import (
    ExperimentSpec,
    McConfig,
    OutputConfig,
    SystemParams,
    emit_config,
    load_config,
    parse_config,
)
from irssop.errors import ConfigError
from irssop.utils import db_to_linear, dbm_to_watt

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def test_empty_document_gives_reference_setup():
    spec = parse_config("# nothing but a comment\n\n")
    assert spec == ExperimentSpec()
    assert spec.system.N == 100
    assert spec.system.P == pytest.approx(dbm_to_watt(5.0))
    assert spec.k_grid == tuple(range(5, 101, 5))


def test_units_and_ranges_are_converted():
    spec = parse_config(
        """
        system.N = 36
        system.P_dBm = 10      # transmit power
        system.sigma2_dBm = -110
        system.C2_dB = -30
        experiment.kind = sweep-n
        experiment.scenarios = 1, 3
        sweep.k_grid = 2:10:4
        sweep.n_grid = 16,36
        sweep.rho_grid = 0.5,0.9
        mc.trials = 1000
        output.format = json
        """
    )
    system = spec.system
    assert (system.N_H, system.N_V) == (6, 6)
    assert system.P == pytest.approx(1e-2)
    assert system.sigma2_B == system.sigma2_E == pytest.approx(dbm_to_watt(-110.0))
    assert system.C2 == pytest.approx(db_to_linear(-30.0))
    assert spec.kind == "sweep-n"
    assert spec.scenarios == (1, 3)
    assert spec.k_grid == (2, 6, 10)
    assert spec.rho_grid == (0.5, 0.9)
    assert spec.mc == McConfig(trials=1000)
    assert spec.output == OutputConfig(format="json")


def test_non_square_element_count():
    assert parse_config("system.N = 12").system.N_H == 12
    assert SystemParams().with_elements(12).N_V == 1


def test_doppler_sets_correlation():
    spec = parse_config("system.fd_Td = 0.05")
    assert spec.system.rho == pytest.approx(rho_from_doppler(0.05))


@pytest.mark.parametrize(
    ("text", "match"),
    [
        ("system.M 4", r"\[line 1\] expected `key = value`"),
        ("system.antennas = 4", r"\[line 1, key 'system.antennas'\] unknown key"),
        ("mc.seed = 1\nmc.seed = 2", r"\[line 2, key 'mc.seed'\] duplicate key"),
        ("system.rho = 0.9\nsystem.fd_Td = 0.1", "conflicts with `system.rho`"),
        ("system.P = 1\nsystem.P_dBm = 30", "conflicts with `system.P`"),
        ("system.N = 16\nsystem.N_H = 4", "conflicts with `system.N_H`"),
        ("system.M = four", r"key 'system.M'\] invalid value 'four'"),
        ("\nsystem.rho = 1.5", r"\[line 2, key 'system.rho'\] must lie in \[0, 1\]"),
        ("system.P_dBm = 5\nmc.trials = 0", r"\[line 2, key 'mc.trials'\] must be >= 1"),
        ("experiment.scenarios = 4", "must be a non-empty list drawn from 1, 2, 3"),
        ("sweep.k_grid = 50:150:50", r"key 'sweep.k_grid'\] values must lie in"),
        ("sweep.k_grid = 10:1:0", "step > 0"),
        ("experiment.run_mc = maybe", "expected a boolean"),
        ("output.format = xlsx", "must be one of"),
        ("system.fd_Td = -1", "must be >= 0"),
    ],
)
def test_invalid_documents(text: str, match: str):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_k_grid_bound_only_applies_to_k_sweeps():
    spec = parse_config("system.N = 16\nexperiment.kind = sweep-n")
    assert max(spec.k_grid) == 100
    with pytest.raises(ConfigError, match="validate.K"):
        parse_config("system.N = 16\nexperiment.kind = validate-dist")


def test_emit_config_round_trip(tmp_path: Path):
    spec = ExperimentSpec(
        kind="sop-point",
        system=SystemParams(N_H=8, N_V=2, rho=0.83, eve_scale=0.5, Rs=4.0),
        scenarios=(1, 2),
        K=7,
        run_mc=False,
        mc=McConfig(trials=1234, seed=99, workers=1),
        output=OutputConfig(path=tmp_path / "out.csv"),
    )
    path = tmp_path / "spec.cfg"
    path.write_text(emit_config(spec))
    assert load_config(path) == spec


@pytest.mark.parametrize("name", ["fig1_worst_case", "fig2_scenarios", "validate"])
def test_shipped_configs_load(name: str):
    spec = load_config(CONFIG_DIR / f"{name}.cfg")
    assert spec.system.N == 100
    assert spec.mc.trials == 100_000


def test_missing_file_is_an_os_error(tmp_path: Path):
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")

"""Config loading, subcommands, file formats, and exit codes."""

import json
import math
import subprocess
import sys

import pytest

import quasidamp
from quasidamp.cli import (
    ConfigError,
    _csv,
    _fmt,
    default_config,
    load_config,
    main,
)
from quasidamp.model import derive_units
from quasidamp.oracle import Verdict
from quasidamp.rates import Channel, QuadratureError


def write_config(tmp_path, name="config.json", **body):
    payload = {"preset": "sodium-paper", **body}
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# config loading


def test_preset_expansion(tmp_path):
    cfg = load_config(write_config(tmp_path))
    units = derive_units(cfg.params)
    assert units.k0 == pytest.approx(2.65e6, rel=2e-3)
    assert cfg.preset == "sodium-paper"
    assert cfg.params.atom_count_N0 == pytest.approx(1e6)


def test_defaults_applied(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.drive.rabi_effective == 1.0e3
    assert cfg.drive.qbar_recoil == 5.0
    assert cfg.drive.gamma_override is None
    assert cfg.qbar_grid == (0.02, 0.05, 0.1, 5.0)
    assert cfg.temperature_grid == (0.0,)
    assert cfg.channel is Channel.SINGLE_LEVEL
    assert cfg.output_dir == "out"
    assert cfg.rabi_bare == 1.0


def test_partial_override_keeps_other_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path, drive={"t_max": 1e-3}))
    assert cfg.drive.t_max == 1e-3
    assert cfg.drive.rabi_effective == 1.0e3  # untouched default


def test_param_override_on_preset(tmp_path):
    cfg = load_config(write_config(tmp_path, params={"temperature_T": 1e-6}))
    assert cfg.params.temperature_T == 1e-6
    assert cfg.params.scattering_length_a == pytest.approx(2.8e-9)


def test_interspecies_coupling_enables_two_level(tmp_path):
    cfg = load_config(
        write_config(
            tmp_path,
            params={"a_bc": 2.8e-9},
            rate_query={"channel": "two_level"},
        )
    )
    assert cfg.channel is Channel.TWO_LEVEL
    assert cfg.params.bc_scattering_length == 2.8e-9


def test_grids_are_sorted(tmp_path):
    cfg = load_config(
        write_config(tmp_path, rate_query={"qbar": [5.0, 0.05], "temperature": [1e-6, 0.0]})
    )
    assert cfg.qbar_grid == (0.05, 5.0)
    assert cfg.temperature_grid == (0.0, 1e-6)


def test_unknown_preset(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"preset": "rubidium"}), encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown preset"):
        load_config(str(path))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="frequency"):
        load_config(write_config(tmp_path, frequency=2.0))


def test_schema_violation_names_offending_key(tmp_path):
    with pytest.raises(ConfigError, match=r"rate_query\.qbar"):
        load_config(write_config(tmp_path, rate_query={"qbar": [-1.0]}))


def test_inconsistent_params_rejected(tmp_path):
    # overriding the density alone breaks N0 = n0 * V
    with pytest.raises(ConfigError, match="atom_count_N0"):
        load_config(write_config(tmp_path, params={"condensate_density_n0": 2e20}))


def test_missing_params_without_preset(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"drive": {"t_max": 1e-3}}), encoding="utf-8")
    with pytest.raises(ConfigError, match="scattering_length_a"):
        load_config(str(path))


def test_empty_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ConfigError, match="line 1"):
        load_config(str(path))


def test_json_error_carries_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "preset": "sodium-paper",\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(str(path))


def test_non_object_root(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="object"):
        load_config(str(path))


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/config.json")


def test_default_config_matches_preset(tmp_path):
    assert default_config().resolved == load_config(write_config(tmp_path)).resolved


# ---------------------------------------------------------------------------
# deterministic formatting


def test_float_formatting_round_trips():
    for x in (0.1, 1.0 / 3.0, 5.0, 1e-300, 530.9385860590878, -0.0):
        assert float(_fmt(x)) == x
    assert _fmt(None) == ""
    assert _fmt(True) == "true"
    assert _fmt(False) == "false"
    assert _fmt(3) == "3"


def test_csv_layout():
    text = _csv(["a", "b"], [[1.5, None], [True, "x"]])
    assert text == "a,b\n1.5,\ntrue,x\n"


# ---------------------------------------------------------------------------
# rates subcommand


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_rates_outputs(tmp_path, capsys):
    cfg_path = write_config(
        tmp_path, rate_query={"qbar": [5.0, 0.05], "temperature": [1e-6, 0.0]}
    )
    out = tmp_path / "out"
    assert main(["rates", "--config", cfg_path, "--out", str(out)]) == 0
    header, rows = read_csv(out / "rates.csv")
    assert header == [
        "qbar",
        "temperature_K",
        "gamma_beliaev_s",
        "gamma_landau_s",
        "gamma_total_s",
        "gamma_over_omega",
        "quad_err",
    ]
    assert len(rows) == 4
    # sorted by (temperature, qbar)
    assert [(float(r[1]), float(r[0])) for r in rows] == [
        (0.0, 0.05),
        (0.0, 5.0),
        (1e-6, 0.05),
        (1e-6, 5.0),
    ]
    cold_recoil = rows[1]
    assert float(cold_recoil[3]) == 0.0  # no stimulated channel at T=0
    assert float(cold_recoil[4]) == pytest.approx(530.9385860590878, rel=1e-9)
    assert 2.1e-3 <= float(cold_recoil[5]) <= 3.5e-3
    assert float(rows[0][2]) == pytest.approx(3.38103382e-06, rel=1e-5)

    meta = json.loads((out / "rates.meta.json").read_text(encoding="utf-8"))
    assert meta["version"] == quasidamp.__version__
    assert meta["preset"] == "sodium-paper"
    assert meta["channel"] == "single_level"
    assert meta["qbar"] == [0.05, 5.0]
    assert meta["units"]["omega0_s^-1"] == pytest.approx(9719.97, rel=1e-5)
    assert "drive" in meta["config"]

    printed = capsys.readouterr().out
    assert "rates.csv" in printed and "rates.meta.json" in printed


def test_rates_deterministic_across_threads(tmp_path, monkeypatch):
    cfg_path = write_config(tmp_path)
    outputs = {}
    for threads in ("1", "8"):
        out = tmp_path / f"out{threads}"
        monkeypatch.setenv("QUASIDAMP_THREADS", threads)
        assert main(["rates", "--config", cfg_path, "--out", str(out)]) == 0
        outputs[threads] = (
            (out / "rates.csv").read_bytes(),
            (out / "rates.meta.json").read_bytes(),
        )
    assert outputs["1"] == outputs["8"]


def test_bad_thread_count(tmp_path, monkeypatch):
    cfg_path = write_config(tmp_path)
    monkeypatch.setenv("QUASIDAMP_THREADS", "many")
    assert main(["rates", "--config", cfg_path, "--out", str(tmp_path / "o")]) == 2


def test_rates_quadrature_failure_leaves_no_files(tmp_path, monkeypatch, capsys):
    import quasidamp.cli as cli_mod

    def boom(query, epsrel=1e-8):
        raise QuadratureError("synthetic stall", partial_rate_s=1.25, error_estimate_s=0.5)

    monkeypatch.setattr(cli_mod, "decay_rate", boom)
    out = tmp_path / "out"
    rc = main(["rates", "--config", write_config(tmp_path), "--out", str(out)])
    assert rc == 3
    assert not (out / "rates.csv").exists()
    assert not (out / "rates.meta.json").exists()
    err = capsys.readouterr().err
    assert "partial rate 1.25" in err and "synthetic stall" in err


# ---------------------------------------------------------------------------
# dynamics subcommand


@pytest.fixture(scope="module")
def dynamics_out(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("dyn")
    cfg_path = write_config(tmp_path, drive={"t_max": 5e-4, "dt_output": 1e-5})
    out = tmp_path / "damped"
    out_free = tmp_path / "free"
    assert main(["dynamics", "--config", cfg_path, "--out", str(out)]) == 0
    assert main(["dynamics", "--config", cfg_path, "--no-damping", "--out", str(out_free)]) == 0
    return out, out_free


def test_dynamics_trajectory_format(dynamics_out):
    out, _ = dynamics_out
    header, rows = read_csv(out / "trajectory.csv")
    assert header == ["t_s", "n_a", "n_b_plus", "n_b_minus", "xi1", "xi2", "xi3", "depletion_valid"]
    assert len(rows) == 51
    first = rows[0]
    assert float(first[0]) == 0.0
    assert float(first[1]) == 0.0  # n_a(0)
    assert float(first[2]) == pytest.approx(3.702332976756625e-4, rel=1e-9)
    assert float(first[6]) == pytest.approx(1.0003702332976757, rel=1e-12)
    assert first[7] == "true"
    assert all(r[7] in ("true", "false") for r in rows)


def test_dynamics_xi_columns(dynamics_out):
    out, _ = dynamics_out
    _, rows = read_csv(out / "trajectory.csv")
    for r in rows:
        xi1, xi2, xi3 = float(r[4]), float(r[5]), float(r[6])
        assert abs(xi1 - xi2) <= 1e-9 * max(1.0, abs(xi1))
        if xi3 < 1.0:  # once squeezing sets in, the spin variances stay larger
            assert xi1 >= xi3


def test_dynamics_summary(dynamics_out):
    out, out_free = dynamics_out
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert set(summary) == {
        "crossing_time_s",
        "gamma_used_s",
        "preset",
        "rabi_effective_s",
        "t_at_xi3_min_s",
        "xi3_min",
    }
    assert summary["gamma_used_s"] == pytest.approx(530.9385860590878, rel=1e-9)
    assert summary["preset"] == "sodium-paper"
    assert 0.0 < summary["crossing_time_s"] < 5e-4
    assert 0.0 < summary["xi3_min"] < 1.0

    free = json.loads((out_free / "summary.json").read_text(encoding="utf-8"))
    assert free["gamma_used_s"] == 0.0
    assert free["crossing_time_s"] is None  # photon mode never catches up
    assert free["xi3_min"] < summary["xi3_min"]


def test_dynamics_deterministic(tmp_path):
    cfg_path = write_config(tmp_path, drive={"t_max": 2e-4, "dt_output": 2e-5})
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["dynamics", "--config", cfg_path, "--out", str(out)]) == 0
        blobs.append(
            (out / "trajectory.csv").read_bytes() + (out / "summary.json").read_bytes()
        )
    assert blobs[0] == blobs[1]


def test_dynamics_integration_failure(tmp_path, capsys):
    cfg_path = write_config(tmp_path, drive={"rabi_effective": 1e8})
    out = tmp_path / "out"
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rc = main(["dynamics", "--config", cfg_path, "--out", str(out)])
    assert rc == 3
    assert "integration failure" in capsys.readouterr().err
    assert not (out / "trajectory.csv").exists()


# ---------------------------------------------------------------------------
# oracle subcommand


def test_oracle_wick_suite(tmp_path):
    out = tmp_path / "out"
    assert main(["oracle", "--suite", "wick", "--out", str(out)]) == 0
    payload = json.loads((out / "oracle.json").read_text(encoding="utf-8"))
    assert payload["suite"] == "wick"
    assert payload["all_pass"] is True
    assert len(payload["verdicts"]) == 48
    record = payload["verdicts"][0]
    assert set(record) == {"name", "expected", "observed", "tolerance", "pass"}


def test_oracle_failure_exit_code(tmp_path, monkeypatch, capsys):
    import quasidamp.cli as cli_mod

    bad = Verdict(name="synthetic-check", expected=1.0, observed=2.0, tolerance=0.1, passed=False)
    monkeypatch.setattr(cli_mod, "wick_suite", lambda: [bad])
    out = tmp_path / "out"
    rc = main(["oracle", "--suite", "wick", "--out", str(out)])
    assert rc == 4
    payload = json.loads((out / "oracle.json").read_text(encoding="utf-8"))
    assert payload["all_pass"] is False  # verdict file still written for inspection
    assert "synthetic-check" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# spectrum subcommand


def test_spectrum_output(tmp_path):
    cfg_path = write_config(tmp_path, rate_query={"qbar": [1.0, 5.0]})
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg_path, "--out", str(out)]) == 0
    header, rows = read_csv(out / "spectrum.csv")
    assert header == ["kbar", "alpha", "u", "v", "omega_bar", "omega_s"]
    unit_row = rows[0]
    assert float(unit_row[1]) == pytest.approx(2.0 - math.sqrt(3.0), rel=1e-12)
    assert float(unit_row[4]) == pytest.approx(math.sqrt(3.0), rel=1e-12)
    assert float(rows[1][5]) == pytest.approx(math.sqrt(675.0) * 9719.971923317471, rel=1e-9)


# ---------------------------------------------------------------------------
# exit codes and process entry


def test_usage_errors_return_2(tmp_path):
    assert main(["rates"]) == 2  # missing --config
    assert main(["no-such-command"]) == 2
    assert main(["rates", "--config", "/nonexistent.json"]) == 2


def test_help_and_version_return_0(capsys):
    assert main(["--help"]) == 0
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert "quasidamp" in out


def test_module_entry_point(tmp_path):
    cfg_path = write_config(tmp_path, rate_query={"qbar": [1.0]})
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "quasidamp", "rates", "--config", cfg_path, "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "rates.csv").exists()

    version = subprocess.run(
        [sys.executable, "-m", "quasidamp", "--version"], capture_output=True, text=True
    )
    assert version.returncode == 0
    assert quasidamp.__version__ in version.stdout

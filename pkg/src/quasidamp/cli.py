"""Command-line front end.

Subcommands:

    rates     decay-rate table over a (temperature, momentum) grid
    dynamics  damped squeezing trajectory and summary
    oracle    self-contained numerical cross-checks, pass/fail verdicts
    spectrum  Bogoliubov mode table on the configured momentum grid

All input comes from a JSON config file validated against a closed schema
(unknown keys are rejected).  Output files are deterministic: fixed column
orders, floats printed with %.17g, LF line endings, no timestamps, and a
byte-identical result regardless of QUASIDAMP_THREADS.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime
(quadrature/integration) failure, 4 oracle check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import jsonschema

from . import __version__
from .dynamics import DriveConfig, IntegrationError, run_squeezing
from .model import (
    PRESETS,
    ParameterError,
    PhysicalParams,
    TwoLevelParams,
    bogoliubov_mode,
    derive_units,
    dispersion,
)
from .oracle import markov_suite, run_all_suites, wick_suite
from .rates import Channel, QuadratureError, RateQuery, decay_rate


class ConfigError(ValueError):
    """Bad config file: parse failure, schema violation, or bad values."""


_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NONNEGATIVE = {"type": "number", "minimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"type": "string"},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scattering_length_a": _POSITIVE,
                "atomic_mass": _POSITIVE,
                "condensate_density_n0": _POSITIVE,
                "volume_V": _POSITIVE,
                "atom_count_N0": _POSITIVE,
                "temperature_T": _NONNEGATIVE,
                "a_bc": _POSITIVE,
            },
        },
        "drive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rabi_effective": _NONNEGATIVE,
                "rabi_bare": _NONNEGATIVE,
                "qbar_recoil": _POSITIVE,
                "gamma_override": {
                    "anyOf": [{"type": "null"}, _NONNEGATIVE],
                },
                "t_max": _POSITIVE,
                "dt_output": _POSITIVE,
            },
        },
        "rate_query": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "qbar": {
                    "type": "array",
                    "items": _POSITIVE,
                    "minItems": 1,
                },
                "temperature": {
                    "type": "array",
                    "items": _NONNEGATIVE,
                    "minItems": 1,
                },
                "channel": {"enum": ["single_level", "two_level"]},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "format": {"enum": ["csv"]},
            },
        },
    },
}

_REQUIRED_PARAM_KEYS = (
    "scattering_length_a",
    "atomic_mass",
    "condensate_density_n0",
    "volume_V",
    "atom_count_N0",
)

_DEFAULTS = {
    "drive": {
        "rabi_effective": 1.0e3,
        "rabi_bare": 1.0,
        "qbar_recoil": 5.0,
        "gamma_override": None,
        "t_max": 6.0e-3,
        "dt_output": 1.0e-5,
    },
    "rate_query": {
        "qbar": [0.02, 0.05, 0.1, 5.0],
        "temperature": [0.0],
        "channel": "single_level",
    },
    "output": {"directory": "out", "format": "csv"},
}


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved run settings (defaults and preset already merged)."""

    preset: str | None
    params: PhysicalParams
    drive: DriveConfig
    qbar_grid: tuple[float, ...]
    temperature_grid: tuple[float, ...]
    channel: Channel
    output_dir: str
    rabi_bare: float
    resolved: dict


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _preset_param_dict(name: str) -> dict:
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r} (known presets: {known})")
    p = PRESETS[name]
    return {
        "scattering_length_a": p.scattering_length_a,
        "atomic_mass": p.atomic_mass,
        "condensate_density_n0": p.condensate_density_n0,
        "volume_V": p.volume_V,
        "atom_count_N0": p.atom_count_N0,
        "temperature_T": p.temperature_T,
    }


def _resolve(user: dict) -> RunConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(user), key=lambda e: e.json_path)
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"config {err.json_path}: {err.message}")

    preset = user.get("preset")
    params_base = _preset_param_dict(preset) if preset is not None else {}
    merged = _deep_merge(_DEFAULTS, {k: v for k, v in user.items() if k != "preset"})
    merged["params"] = _deep_merge(params_base, user.get("params", {}))
    merged.setdefault("params", {}).setdefault("temperature_T", 0.0)

    missing = [k for k in _REQUIRED_PARAM_KEYS if k not in merged["params"]]
    if missing:
        raise ConfigError(
            f"params.{missing[0]} is required (no preset supplies it)"
        )

    pd = merged["params"]
    two_level = TwoLevelParams(a_bc=pd["a_bc"]) if "a_bc" in pd else None
    try:
        params = PhysicalParams(
            scattering_length_a=pd["scattering_length_a"],
            atomic_mass=pd["atomic_mass"],
            condensate_density_n0=pd["condensate_density_n0"],
            volume_V=pd["volume_V"],
            atom_count_N0=pd["atom_count_N0"],
            temperature_T=pd["temperature_T"],
            two_level=two_level,
        )
        dd = merged["drive"]
        drive = DriveConfig(
            rabi_effective=dd["rabi_effective"],
            qbar_recoil=dd["qbar_recoil"],
            gamma_override=dd["gamma_override"],
            t_max=dd["t_max"],
            dt_output=dd["dt_output"],
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    rq = merged["rate_query"]
    resolved = dict(merged)
    resolved["preset"] = preset
    return RunConfig(
        preset=preset,
        params=params,
        drive=drive,
        qbar_grid=tuple(sorted(rq["qbar"])),
        temperature_grid=tuple(sorted(rq["temperature"])),
        channel=Channel(rq["channel"]),
        output_dir=merged["output"]["directory"],
        rabi_bare=dd["rabi_bare"],
        resolved=resolved,
    )


def load_config(path: str) -> RunConfig:
    """Parse, validate, and resolve a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            user = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config root must be a JSON object, got {type(user).__name__}")
    return _resolve(user)


def default_config() -> RunConfig:
    """The sodium preset with stock grids (used when oracle runs configless)."""
    return _resolve({"preset": "sodium-paper"})


# ---------------------------------------------------------------------------
# deterministic writers


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(out_dir: str, files: dict[str, str]) -> list[str]:
    """Write all files or none: partial output is removed on failure."""
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    try:
        for name, content in files.items():
            path = os.path.join(out_dir, name)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(content)
            written.append(path)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return written


def _thread_count() -> int:
    raw = os.environ.get("QUASIDAMP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QUASIDAMP_THREADS must be an integer, got {raw!r}")
    return max(1, n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_rates(cfg: RunConfig, out_dir: str) -> int:
    """rates.csv + rates.meta.json over the (temperature, qbar) grid."""
    units = derive_units(cfg.params)
    grid = [(t, q) for t in cfg.temperature_grid for q in cfg.qbar_grid]

    def one(point: tuple[float, float]) -> list:
        temperature, qbar = point
        query = RateQuery(
            qbar=qbar,
            temperature_T=temperature,
            channel=cfg.channel,
            params=cfg.params,
        )
        result = decay_rate(query)
        omega_q = dispersion(qbar) * units.omega0
        return [
            qbar,
            temperature,
            result.gamma_beliaev,
            result.gamma_landau,
            result.gamma_total,
            result.gamma_total / omega_q,
            result.quadrature_error_estimate,
        ]

    n_threads = _thread_count()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(point) for point in grid]

    header = [
        "qbar",
        "temperature_K",
        "gamma_beliaev_s",
        "gamma_landau_s",
        "gamma_total_s",
        "gamma_over_omega",
        "quad_err",
    ]
    meta = {
        "version": __version__,
        "preset": cfg.preset,
        "channel": cfg.channel.value,
        "qbar": list(cfg.qbar_grid),
        "temperature_K": list(cfg.temperature_grid),
        "units": {"k0_m^-1": units.k0, "omega0_s^-1": units.omega0},
        "config": cfg.resolved,
    }
    for path in _emit(out_dir, {"rates.csv": _csv(header, rows), "rates.meta.json": _json_text(meta)}):
        print(f"wrote {path}")
    return 0


def cmd_dynamics(cfg: RunConfig, out_dir: str, no_damping: bool = False) -> int:
    """trajectory.csv + summary.json for the configured drive."""
    drive = cfg.drive
    if no_damping:
        drive = dataclasses.replace(drive, gamma_override=0.0)
    run = run_squeezing(cfg.params, drive)

    header = ["t_s", "n_a", "n_b_plus", "n_b_minus", "xi1", "xi2", "xi3", "depletion_valid"]
    rows = [
        [p.t, p.n_a, p.n_b_plus, p.n_b_minus, p.xi1, p.xi2, p.xi3, p.depletion_valid]
        for p in run.points
    ]

    xi3_min = None
    t_at_min = None
    for p in run.points:
        if p.xi3 is not None and (xi3_min is None or p.xi3 < xi3_min):
            xi3_min, t_at_min = p.xi3, p.t
    crossing = next((p.t for p in run.points if p.n_a >= p.n_b_plus), None)

    summary = {
        "gamma_used_s": run.gamma_used,
        "xi3_min": xi3_min,
        "t_at_xi3_min_s": t_at_min,
        "crossing_time_s": crossing,
        "preset": cfg.preset,
        "rabi_effective_s": drive.rabi_effective,
    }
    files = {
        "trajectory.csv": _csv(header, rows),
        "summary.json": _json_text(summary),
    }
    for path in _emit(out_dir, files):
        print(f"wrote {path}")
    return 0


def cmd_oracle(suite: str, out_dir: str) -> int:
    """oracle.json with one verdict per cross-check; exit 4 on any failure."""
    if suite == "markov":
        verdicts = markov_suite()
    elif suite == "wick":
        verdicts = wick_suite()
    else:
        verdicts = run_all_suites()
    all_pass = all(v.passed for v in verdicts)
    payload = {
        "suite": suite,
        "all_pass": all_pass,
        "verdicts": [v.as_record() for v in verdicts],
    }
    for path in _emit(out_dir, {"oracle.json": _json_text(payload)}):
        print(f"wrote {path}")
    if not all_pass:
        failed = [v.name for v in verdicts if not v.passed]
        print(f"oracle checks failed: {', '.join(failed)}", file=sys.stderr)
        return 4
    return 0


def cmd_spectrum(cfg: RunConfig, out_dir: str) -> int:
    """spectrum.csv: Bogoliubov mode table on the configured qbar grid."""
    units = derive_units(cfg.params)
    header = ["kbar", "alpha", "u", "v", "omega_bar", "omega_s"]
    rows = []
    for kbar in cfg.qbar_grid:
        mode = bogoliubov_mode(kbar)
        rows.append(
            [kbar, mode.alpha, mode.u, mode.v, mode.omega_bar, mode.omega_bar * units.omega0]
        )
    for path in _emit(out_dir, {"spectrum.csv": _csv(header, rows)}):
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasidamp",
        description="Collisional quasiparticle damping and number squeezing in a BEC.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rates = sub.add_parser("rates", help="decay-rate table over a momentum/temperature grid")
    p_rates.add_argument("--config", required=True, help="JSON config file")
    p_rates.add_argument("--out", default=None, help="output directory (overrides config)")

    p_dyn = sub.add_parser("dynamics", help="damped squeezing trajectory")
    p_dyn.add_argument("--config", required=True, help="JSON config file")
    p_dyn.add_argument("--out", default=None, help="output directory (overrides config)")
    p_dyn.add_argument(
        "--no-damping",
        action="store_true",
        help="force the damping rate to zero (unitary pair creation)",
    )

    p_oracle = sub.add_parser("oracle", help="run numerical cross-checks")
    p_oracle.add_argument("--config", default=None, help="JSON config file (optional)")
    p_oracle.add_argument("--out", default=None, help="output directory (overrides config)")
    p_oracle.add_argument(
        "--suite",
        choices=["markov", "wick", "all"],
        default="all",
        help="which cross-check suite to run",
    )

    p_spec = sub.add_parser("spectrum", help="Bogoliubov mode table")
    p_spec.add_argument("--config", required=True, help="JSON config file")
    p_spec.add_argument("--out", default=None, help="output directory (overrides config)")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version, 2 for usage errors
        return 0 if exc.code in (0, None) else 2

    try:
        if args.command == "oracle" and args.config is None:
            cfg = default_config()
        else:
            cfg = load_config(args.config)
        out_dir = args.out if args.out is not None else cfg.output_dir

        if args.command == "rates":
            return cmd_rates(cfg, out_dir)
        if args.command == "dynamics":
            return cmd_dynamics(cfg, out_dir, no_damping=args.no_damping)
        if args.command == "oracle":
            return cmd_oracle(args.suite, out_dir)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out_dir)
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QuadratureError as exc:
        print(
            f"quadrature failure: {exc} "
            f"(partial rate {exc.partial_rate_s:.6g} s^-1, "
            f"error estimate {exc.error_estimate_s:.6g} s^-1)",
            file=sys.stderr,
        )
        return 3
    except IntegrationError as exc:
        print(
            f"integration failure: {exc} (last valid state at t = {exc.last_valid.t:.6g} s)",
            file=sys.stderr,
        )
        return 3


def main_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()

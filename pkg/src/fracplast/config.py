"""INI run configuration: parsing, validation, and round-trip writing.

A config file fully specifies one simulation: the material constants,
the time grid, the strain program, and optional run options. Parsing is
strict; unknown sections or keys are errors so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .driver import (LinearRamp, LoadProgram, QuadraticRamp, Sinusoid,
                     TimeGrid, TriangleWave)
from .plasticity import MaterialParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "write_config"]


class ConfigError(Exception):
    """Raised for malformed, incomplete, or invalid run configurations."""


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to run one simulation."""

    material: MaterialParams
    grid: TimeGrid
    load: LoadProgram
    energy_mode: str = "auto"
    output_path: str | None = None


_MATERIAL_KEYS = {
    "e_pseudo_pa_s_betae": "E_pseudo",
    "beta_e": "beta_E",
    "k_pseudo_pa_s_betak": "K_pseudo",
    "beta_k": "beta_K",
    "h_pa": "H",
    "tau_y_pa": "tau_Y",
    "s_pa": "S",
    "s_exp": "s_exp",
}

_PROGRAM_KEYS = {
    "linear_ramp": ("rate_per_s",),
    "quadratic_ramp": ("t_s",),
    "sinusoid": ("amplitude", "omega_rad_per_s"),
    "triangle_wave": ("amplitude", "omega_per_s"),
}

_RUN_KEYS = ("energy_mode", "output_path")


def _get_float(section, section_name: str, key: str) -> float:
    if key not in section:
        raise ConfigError(f"[{section_name}] is missing required key {key!r}")
    raw = section[key]
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"[{section_name}] {key} = {raw!r} is not a number") from None


def _get_int(section, section_name: str, key: str) -> int:
    if key not in section:
        raise ConfigError(f"[{section_name}] is missing required key {key!r}")
    raw = section[key]
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(
            f"[{section_name}] {key} = {raw!r} is not an integer") from None


def _check_keys(section, section_name: str, allowed) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"[{section_name}] has unknown key {key!r}")


def _parse_material(section) -> MaterialParams:
    _check_keys(section, "material", _MATERIAL_KEYS)
    kwargs = {field: _get_float(section, "material", key)
              for key, field in _MATERIAL_KEYS.items()}
    try:
        return MaterialParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[material] {exc}") from None


def _parse_grid(section) -> TimeGrid:
    _check_keys(section, "grid", ("t_s", "n"))
    T = _get_float(section, "grid", "t_s")
    N = _get_int(section, "grid", "n")
    try:
        return TimeGrid(T=T, N=N)
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None


def _parse_load(section) -> LoadProgram:
    if "program" not in section:
        raise ConfigError("[load] is missing required key 'program'")
    name = section["program"].strip().lower()
    if name not in _PROGRAM_KEYS:
        known = ", ".join(sorted(_PROGRAM_KEYS))
        raise ConfigError(
            f"[load] unknown program {name!r}; expected one of: {known}")
    allowed = ("program",) + _PROGRAM_KEYS[name]
    _check_keys(section, "load", allowed)
    vals = {key: _get_float(section, "load", key)
            for key in _PROGRAM_KEYS[name]}
    if name == "linear_ramp":
        return LinearRamp(rate=vals["rate_per_s"])
    if name == "quadratic_ramp":
        if not vals["t_s"] > 0.0:
            raise ConfigError("[load] t_s must be positive")
        return QuadraticRamp(T=vals["t_s"])
    if name == "sinusoid":
        return Sinusoid(amplitude=vals["amplitude"],
                        omega=vals["omega_rad_per_s"])
    return TriangleWave(amplitude=vals["amplitude"], omega=vals["omega_per_s"])


def parse_config(path: str) -> RunConfig:
    """Read and validate a run configuration file."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path!r}: {exc}") from None

    known_sections = ("material", "grid", "load", "run")
    for sec in parser.sections():
        if sec not in known_sections:
            raise ConfigError(f"unknown section [{sec}]")
    for sec in ("material", "grid", "load"):
        if not parser.has_section(sec):
            raise ConfigError(f"missing required section [{sec}]")

    material = _parse_material(parser["material"])
    grid = _parse_grid(parser["grid"])
    load = _parse_load(parser["load"])

    energy_mode = "auto"
    output_path = None
    if parser.has_section("run"):
        run = parser["run"]
        _check_keys(run, "run", _RUN_KEYS)
        energy_mode = run.get("energy_mode", "auto").strip().lower()
        if energy_mode not in ("auto", "direct", "fft"):
            raise ConfigError(
                f"[run] energy_mode must be auto, direct or fft, "
                f"got {energy_mode!r}")
        output_path = run.get("output_path", None)
    return RunConfig(material=material, grid=grid, load=load,
                     energy_mode=energy_mode, output_path=output_path)


def _fmt(x: float) -> str:
    # 17 significant digits round-trip IEEE doubles exactly.
    return format(float(x), ".17g")


def write_config(config: RunConfig, path: str) -> None:
    """Write a configuration file that parse_config reads back equal."""
    m = config.material
    lines = [
        "[material]",
        f"E_pseudo_pa_s_betaE = {_fmt(m.E_pseudo)}",
        f"beta_E = {_fmt(m.beta_E)}",
        f"K_pseudo_pa_s_betaK = {_fmt(m.K_pseudo)}",
        f"beta_K = {_fmt(m.beta_K)}",
        f"H_pa = {_fmt(m.H)}",
        f"tau_Y_pa = {_fmt(m.tau_Y)}",
        f"S_pa = {_fmt(m.S)}",
        f"s_exp = {_fmt(m.s_exp)}",
        "",
        "[grid]",
        f"T_s = {_fmt(config.grid.T)}",
        f"N = {config.grid.N}",
        "",
        "[load]",
    ]
    load = config.load
    if isinstance(load, LinearRamp):
        lines += ["program = linear_ramp", f"rate_per_s = {_fmt(load.rate)}"]
    elif isinstance(load, QuadraticRamp):
        lines += ["program = quadratic_ramp", f"T_s = {_fmt(load.T)}"]
    elif isinstance(load, Sinusoid):
        lines += ["program = sinusoid",
                  f"amplitude = {_fmt(load.amplitude)}",
                  f"omega_rad_per_s = {_fmt(load.omega)}"]
    elif isinstance(load, TriangleWave):
        lines += ["program = triangle_wave",
                  f"amplitude = {_fmt(load.amplitude)}",
                  f"omega_per_s = {_fmt(load.omega)}"]
    else:
        raise ConfigError(f"cannot serialize load program {load!r}")
    lines += ["", "[run]", f"energy_mode = {config.energy_mode}"]
    if config.output_path is not None:
        lines.append(f"output_path = {config.output_path}")
    lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))

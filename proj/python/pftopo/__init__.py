"""Phase-field topology optimization with graded soft material."""

from ._pftopo import (
    Case,
    ConfigError,
    case_names,
    double_well,
    graded_scale,
    infill,
    load_config,
    make_case,
    material_fraction,
    override_keys,
    parse_config,
    phase_scale,
    read_field,
    run,
    solve_state,
    sweep,
    write_field,
    write_pgm,
)

__all__ = [
    "Case",
    "ConfigError",
    "case_names",
    "double_well",
    "graded_scale",
    "infill",
    "load_config",
    "make_case",
    "material_fraction",
    "override_keys",
    "parse_config",
    "phase_scale",
    "read_field",
    "run",
    "solve_state",
    "sweep",
    "write_field",
    "write_pgm",
]

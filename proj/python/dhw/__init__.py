"""Darwin-Howie-Whelan beam propagation with a-priori error certificates."""

import json

from ._dhw import (
    Config,
    DomainError,
    Error,
    InvariantError,
    NumericError,
    ValidationError,
    excitation_grid,
    fnv1a64,
    lattice_sum,
    load_config,
    parse_config,
    randomized_suite,
    relativistic_params,
    significant_digits,
)
from ._dhw import run as _run


def run(config, z_samples=None, oracle_tol=None, out_dir=None):
    """Solve every beam set of `config`; the JSON report comes back parsed."""
    if isinstance(config, (str, bytes)) or hasattr(config, "__fspath__"):
        config = load_config(config)
    result = _run(config, z_samples, oracle_tol, None if out_dir is None else str(out_dir))
    result["report"] = json.loads(result.pop("report_json"))
    return result


__all__ = [
    "Config",
    "DomainError",
    "Error",
    "InvariantError",
    "NumericError",
    "ValidationError",
    "excitation_grid",
    "fnv1a64",
    "lattice_sum",
    "load_config",
    "parse_config",
    "randomized_suite",
    "relativistic_params",
    "run",
    "significant_digits",
]

"""Anti-windup benchmark on the REMUS yaw model (C++ core)."""

import json

from ._awbench import (
    ConfigParseError,
    InfeasibleProblemError,
    MetricsUnavailableError,
    PreconditionError,
    StateSpace,
    ValidationError,
    config_keys,
    known_controllers,
    lqi_gains,
    margins,
    metrics,
    remus_yaw_model,
    simulate,
    solve_qp,
    zoh_discretize,
)
from ._awbench import compare as _compare


def compare(config="", out_dir=""):
    """Run the configured controllers, write artifacts, return (reports, files)."""
    text, files = _compare(config, out_dir)
    return json.loads(text), files


__all__ = [
    "ConfigParseError",
    "InfeasibleProblemError",
    "MetricsUnavailableError",
    "PreconditionError",
    "StateSpace",
    "ValidationError",
    "compare",
    "config_keys",
    "known_controllers",
    "lqi_gains",
    "margins",
    "metrics",
    "remus_yaw_model",
    "simulate",
    "solve_qp",
    "zoh_discretize",
]

"""Online continual learning with replay, pooled distillation and channel attention."""

from ._core import (
    ConfigError,
    FormatError,
    NumericError,
    acc,
    compute_metrics,
    effective_config,
    eca_forward,
    fm,
    kernel_size_rule,
    la,
    pod_embed,
    pod_loss,
    read_report,
    run_experiment,
    summarize,
    synthetic_suite,
    verify,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "NumericError",
    "acc",
    "compute_metrics",
    "effective_config",
    "eca_forward",
    "fm",
    "kernel_size_rule",
    "la",
    "pod_embed",
    "pod_loss",
    "read_report",
    "run_experiment",
    "summarize",
    "synthetic_suite",
    "verify",
]

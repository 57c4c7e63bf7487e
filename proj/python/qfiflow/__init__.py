"""Quantum Fisher information flow for time-local open-system dynamics."""

from ._core import (
    ConfigError,
    DampedJCParams,
    InvariantViolation,
    NonpositiveQfi,
    QfiflowError,
    RateSingularity,
    StepSizeUnderflow,
    SupportInconsistency,
    analytic_flow,
    analytic_qfi,
    analytic_state,
    channel_subflow_factor,
    cramer_rao_bound,
    emit_fig2_panels,
    gamma_t,
    h_dot,
    h_function,
    h_zeros,
    normalize_config,
    qfi,
    qfi_bloch,
    run_scenario,
    sld,
)

__all__ = [
    "ConfigError",
    "DampedJCParams",
    "InvariantViolation",
    "NonpositiveQfi",
    "QfiflowError",
    "RateSingularity",
    "StepSizeUnderflow",
    "SupportInconsistency",
    "analytic_flow",
    "analytic_qfi",
    "analytic_state",
    "channel_subflow_factor",
    "cramer_rao_bound",
    "emit_fig2_panels",
    "gamma_t",
    "h_dot",
    "h_function",
    "h_zeros",
    "normalize_config",
    "qfi",
    "qfi_bloch",
    "run_scenario",
    "sld",
]

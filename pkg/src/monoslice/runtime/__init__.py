"""Execution runtime: interpreter, transports, and the running system."""

from .interpreter import (
    ExecutionContext,
    Fault,
    FaultSignal,
    LocalContext,
    assign_path,
    eval_expr,
    exec_statements,
    read_path,
)
from .system import (
    BindError,
    DEFAULT_INVOKE_TIMEOUT,
    DEFAULT_SHUTDOWN_TIMEOUT,
    RunningSystem,
    ServiceReport,
    SystemReport,
    start,
)
from .transport import TransportError, http_invoke_ow, http_invoke_rr

__all__ = [
    "BindError",
    "DEFAULT_INVOKE_TIMEOUT",
    "DEFAULT_SHUTDOWN_TIMEOUT",
    "ExecutionContext",
    "Fault",
    "FaultSignal",
    "LocalContext",
    "RunningSystem",
    "ServiceReport",
    "SystemReport",
    "TransportError",
    "assign_path",
    "eval_expr",
    "exec_statements",
    "http_invoke_ow",
    "http_invoke_rr",
    "read_path",
    "start",
]

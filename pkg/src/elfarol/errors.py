"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented process exit codes (2 config, 3 transport, 4 data).
"""

from __future__ import annotations


class ElFarolError(Exception):
    exit_code = 1
    code = "error"


class ConfigError(ElFarolError):
    exit_code = 2
    code = "config"


class ContractError(ElFarolError):
    """A caller broke an operation's precondition."""

    exit_code = 4
    code = "contract"


# -- LLM transport ---------------------------------------------------------


class LlmError(ElFarolError):
    exit_code = 3
    code = "transport"


class AuthError(LlmError):
    code = "auth"


class TransportError(LlmError):
    code = "transport"


class ProtocolError(LlmError):
    code = "protocol"


class RequestRejected(LlmError):
    """Non-transient 4xx other than an authentication failure."""

    code = "rejected"


# -- traces and analysis ---------------------------------------------------


class DataError(ElFarolError):
    exit_code = 4
    code = "data"


class ParseError(DataError):
    code = "parse"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(DataError):
    code = "schema"


class ConsistencyError(DataError):
    code = "consistency"


class MissingRecordError(DataError):
    code = "missing_record"


class NoCrowdingError(DataError):
    code = "no_crowding"


class NoEventError(DataError):
    code = "no_event"


class DegenerateSampleError(DataError):
    code = "degenerate_sample"


class IncompleteRunError(DataError):
    code = "incomplete_run"

"""Exception hierarchy shared across the harness."""


class DuplexBenchError(Exception):
    """Base class for all harness errors."""


class InvalidArgument(DuplexBenchError, ValueError):
    """A caller violated a documented precondition."""


class DecodeError(DuplexBenchError):
    """Token sequence cannot be decoded (unknown id, wrong shape)."""


class StitchError(DuplexBenchError):
    """Dialog script cannot be rendered (bad pad, speaker collision)."""


class UndefinedMetric(DuplexBenchError):
    """Metric has no value for this input (e.g. no onsets anywhere)."""


class SchemaError(DuplexBenchError):
    """A scenario or sidecar file violates its schema.

    ``field`` names the offending entry when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ProtocolError(DuplexBenchError):
    """Wire message violated the framing contract."""


class HandshakeError(ProtocolError):
    """HELLO negotiation failed (bad magic, version, or parameters)."""


class TransportError(DuplexBenchError):
    """The byte stream under a wire session failed or timed out."""

    def __init__(self, message: str, frame_index: int | None = None):
        if frame_index is not None:
            message = f"{message} (frame {frame_index})"
        super().__init__(message)
        self.frame_index = frame_index


class JudgeUnavailable(DuplexBenchError):
    """Remote judge endpoint failed after all retries."""


class JudgeParseError(DuplexBenchError):
    """Judge replied, but no 1-5 score could be parsed."""

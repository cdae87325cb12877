"""Exception types shared across the platform.

Every error carries a short machine-readable ``code`` so the HTTP layer can
map module failures onto stable wire codes without string matching.
"""


class AvpError(Exception):
    code = "error"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code)
        self.detail = detail or self.code


class UnsupportedFormat(AvpError):
    code = "unsupported_format"


class CorruptMedia(AvpError):
    code = "corrupt_media"


class UnknownAsset(AvpError):
    code = "unknown_asset"


class TooShort(AvpError):
    code = "too_short"


class AlreadyIndexed(AvpError):
    code = "already_indexed"


class NotIndexed(AvpError):
    code = "not_indexed"


class UnknownSegment(AvpError):
    code = "unknown_segment"


class EmptyQuery(AvpError):
    code = "empty_query"


class SchemaViolation(AvpError):
    code = "schema_violation"


class InvalidSpan(AvpError):
    code = "invalid_span"


class UnknownEvent(AvpError):
    code = "unknown_event"


class UnknownDashboard(AvpError):
    code = "unknown_dashboard"


class DuplicateMember(AvpError):
    code = "duplicate_member"


class NoAcousticMatch(AvpError):
    code = "no_acoustic_match"


class SyncPointOutOfRange(AvpError):
    code = "sync_point_out_of_range"


class ConfigError(AvpError):
    code = "config_error"

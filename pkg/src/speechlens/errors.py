"""Exception hierarchy.

Everything raised on purpose derives from SpeechLensError so callers can
catch one base. ValidationError doubles as a ValueError for code that
follows the usual sklearn convention of catching ValueError on bad input.
"""


class SpeechLensError(Exception):
    pass


class ValidationError(SpeechLensError, ValueError):
    """Invalid in-memory value: out-of-range parameter, bad shape, rate mismatch."""


class AudioIOError(SpeechLensError):
    """Unreadable, unsupported, or empty audio file."""


class AlignmentError(SpeechLensError):
    """Malformed alignment data or timestamps that cannot be normalized."""


class ManifestError(SpeechLensError):
    """Malformed dataset manifest or report collection."""


class OracleError(SpeechLensError):
    """Classifier failure: transport error, bad payload, non-normalized output."""


class UsageError(SpeechLensError):
    """Command line invoked incorrectly."""

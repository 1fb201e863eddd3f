class FormatError(RuntimeError):
    """Raised when a map file has a malformed header or payload."""

class ClientError(Exception):
    """Base class for client-side decode/encode failures."""


class BadMagic(ClientError):
    pass


class VersionUnsupported(ClientError):
    pass


class TruncatedPayload(ClientError):
    pass


class ChecksumMismatch(ClientError):
    pass


class InvalidSimplexRow(ClientError):
    pass

from django.core.exceptions import ValidationError
from requests import RequestException


class ParseError(ValidationError):
    """
    Schema violation in an NDJSON input, pinned to a line.
    """

    def __init__(self, message, *, path=None, lineno=None):
        location = ':'.join(str(part) for part in (path, lineno) if part is not None)
        if location:
            message = '{location}: {message}'.format(location=location, message=message)
        super().__init__(message, code='parse_error')
        self.path = path
        self.lineno = lineno


class UnknownContract(LookupError):
    pass


class NotFingerprintable(ValueError):
    pass


class FetchError(RequestException):
    def __init__(self, address, reason):
        super().__init__('{address}: {reason}'.format(address=address, reason=reason))
        self.address = address


class BundleIntegrityError(RuntimeError):
    pass

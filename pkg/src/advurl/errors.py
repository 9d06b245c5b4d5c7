"""Exception hierarchy shared across the package."""


class AdvUrlError(Exception):
    """Base class for every error raised by advurl."""


class UnparsableUrl(AdvUrlError, ValueError):
    pass


class EmptyDomain(AdvUrlError, ValueError):
    pass


class EmptyDictionary(AdvUrlError, ValueError):
    pass


class EmptyCorpus(AdvUrlError, ValueError):
    pass


class EmptyString(AdvUrlError, ValueError):
    pass


class UnknownKind(AdvUrlError, ValueError):
    pass


class ProviderUnavailable(AdvUrlError):
    """A web provider could not answer (offline, missing fixture, network error)."""


class SchemaMismatch(AdvUrlError, ValueError):
    pass


class MissingColumn(AdvUrlError, ValueError):
    pass


class EmptyFile(AdvUrlError, ValueError):
    pass


class InsufficientRows(AdvUrlError, ValueError):
    pass


class NoFeatures(AdvUrlError, ValueError):
    pass


class TooFewRows(AdvUrlError, ValueError):
    pass


class SingleClass(AdvUrlError, ValueError):
    pass


class EmptyMatrix(AdvUrlError, ValueError):
    pass


class TooFewPoints(AdvUrlError, ValueError):
    pass


class InvalidClass(AdvUrlError, ValueError):
    pass


class OracleFailure(AdvUrlError):
    pass


class ConfigInvalid(AdvUrlError, ValueError):
    pass


class InputMissing(AdvUrlError, FileNotFoundError):
    pass

"""Exception hierarchy shared across the package."""


class CertusError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CertusError):
    """A numeric argument fell outside the confidence domain [0, 1]."""


class InvalidSetError(CertusError):
    """An operation that requires a valid fuzzy set received an invalid one."""

    def __init__(self, violations):
        super().__init__("invalid fuzzy set: " + "; ".join(violations))
        self.violations = list(violations)


class LadderError(CertusError):
    """A canonical-ladder definition or override is unusable."""


class DocumentError(CertusError):
    """An argument document is structurally malformed."""


class CertusSyntaxError(CertusError):
    """Annotation or definition source failed to tokenize or parse."""

    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class BindError(CertusError):
    """A parsed annotation could not be resolved against the graph.

    `code` carries the stable finding identifier (REF001, OP001, OP002,
    OP003) so preflight can aggregate bind failures.
    """

    def __init__(self, message, code="REF001"):
        super().__init__(message)
        self.code = code


class MacroError(CertusError):
    """Macro expansion failed.

    Stable codes: MAC001 unknown macro, MAC002 provider-reported error,
    MAC003 protocol or transport failure, MAC004 provider timeout,
    MAC005 expansion text rejected (parse/bind/totality).
    """

    def __init__(self, message, code="MAC005"):
        super().__init__(message)
        self.code = code


class EvalError(CertusError):
    """Assessment hit a state preflight should have ruled out."""

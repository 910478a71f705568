"""Exception hierarchy shared across the package.

``ValidationError`` covers bad input (files, configs, rankings) and maps to
CLI exit code 2.  Everything else deriving from ``FairRankError`` is a
runtime failure and maps to exit code 3.
"""


class FairRankError(Exception):
    """Base class for all errors raised by fairrank."""


class ValidationError(FairRankError, ValueError):
    """Input violates a documented contract."""


class ParseError(ValidationError):
    """A text or JSON-lines source could not be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int, optional
        1-based line number of the offending line.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoCoverageError(FairRankError, ValueError):
    """None of the requested tokens exist in the embedding table."""

    def __init__(self, tokens):
        self.tokens = list(tokens)
        super().__init__(f"no coverage: none of {self.tokens!r} are in the vocabulary")


class EmptyDistributionError(ValidationError):
    """A group distribution was requested over an empty effective record set."""


class AbsoluteContinuityError(FairRankError, ValueError):
    """KL(p || q) is undefined because p puts mass where q has none."""


class PermutationError(ValidationError):
    """A ranking is not a permutation of its corpus ids."""


class MissingAnnotationError(ValidationError, KeyError):
    """One or more image refs have no stored detection result."""

    def __init__(self, refs):
        self.refs = sorted(refs)
        super().__init__(f"missing annotation for: {', '.join(self.refs)}")

    def __str__(self):
        return self.args[0]


class ProviderError(FairRankError, RuntimeError):
    """A live detection provider failed."""


class ProviderTransportError(ProviderError):
    pass


class ProviderAuthError(ProviderError):
    pass

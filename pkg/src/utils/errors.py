# src/utils/errors.py


class IncexError(Exception):
    """Base class for every error raised by the services."""


class ParseError(IncexError):
    """Error tied to a line of an input file (1-based line number)."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


# ------------------------------------------------------
# CORPUS / FORMAT ERRORS
# ------------------------------------------------------
class MalformedLine(ParseError):
    pass


class UnknownTag(ParseError):
    pass


class UnknownCategory(ParseError):
    pass


class EmptyDataset(IncexError):
    pass


class LengthMismatch(IncexError):
    pass


class OverlappingPhrases(IncexError):
    pass


class OutOfBounds(IncexError):
    pass


class IndexOutOfRange(IncexError):
    pass


# ------------------------------------------------------
# EMBEDDINGS
# ------------------------------------------------------
class DimensionMismatch(ParseError):
    pass


class UnparsableNumber(ParseError):
    pass


# ------------------------------------------------------
# TRAINING / MODELS
# ------------------------------------------------------
class EmptyData(IncexError):
    pass


class DegenerateData(IncexError):
    pass


class VersionMismatch(ParseError):
    pass


class MalformedModel(ParseError):
    pass


# ------------------------------------------------------
# EVALUATION
# ------------------------------------------------------
class EmptyInput(IncexError):
    pass


class Misaligned(IncexError):
    pass

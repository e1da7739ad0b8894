"""Exception hierarchy shared by every sdcomp module.

The CLI maps these classes onto exit codes, so new failure modes should
subclass one of them rather than raise bare exceptions.
"""


class SdcompError(Exception):
    """Base class for all sdcomp failures."""


class FormatError(SdcompError, ValueError):
    """Input bytes or text do not follow the expected format."""


class PpmError(FormatError):
    pass


class PriorsError(FormatError):
    pass


class BitstreamError(FormatError):
    """SDC1 container violates its layout or ordering rules."""


class RegionDecodeError(FormatError):
    """Region payload is exhausted early or breaks the entropy grammar."""


class ResponseParseError(FormatError):
    """An LMM answer could not be parsed."""


class CaptionParseError(ResponseParseError):
    pass


class RankingParseError(ResponseParseError):
    pass


class RdCurveError(FormatError):
    """RD samples unusable for BD-rate (too few, no overlap, singular fit)."""


class TransportError(SdcompError):
    """The LMM endpoint failed to return a complete text response."""

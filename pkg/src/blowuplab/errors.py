"""Error types shared across the package.

Every error condition named in an operation contract gets its own class so
callers (and the CLI) can dispatch on the condition rather than on message
text.
"""


class BlowupLabError(Exception):
    """Base class for all domain errors raised by this package."""


class NonInjectiveTuple(BlowupLabError):
    """A relation tuple repeats a vertex; canonical structures forbid this."""


class OutOfRangeVertex(BlowupLabError):
    """A vertex index is outside 1..n."""


class UnknownPredicate(BlowupLabError):
    """A predicate symbol is not part of the language."""


class LanguageMismatch(BlowupLabError):
    """Two structures that must share a language do not."""


class TooLarge(BlowupLabError):
    """Input exceeds the exactness / budget bound of the operation."""


class FormulaSyntaxError(BlowupLabError):
    """Parse failure; carries the 0-based offset of the offending token."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ArityError(BlowupLabError):
    """An atom or assignment has the wrong number of arguments."""


class VariableOutOfRange(BlowupLabError):
    """A formula variable index exceeds the declared free-variable count."""


class TooManyFreeTuples(BlowupLabError):
    """Substitution enumeration would branch over more than 2**20 candidates."""


class EmptyGraph(BlowupLabError):
    """Modular decomposition needs at least one vertex."""


class NotPrimeClosed(BlowupLabError):
    """Membership test requires a family of primes closed under prime substructures."""


class Budget(BlowupLabError):
    """An enumeration exceeded its configured member cap."""


class UnsupportedMode(BlowupLabError):
    """The requested density mode is not available for this source."""


class MotifTooLarge(BlowupLabError):
    """Density computation is capped at small motif sizes."""


class DegenerateSource(BlowupLabError):
    """A sampling source has a node with no surviving children."""


class EmptyMask(BlowupLabError):
    """A cylinder mask removed every child of some node."""


class BadParameter(BlowupLabError):
    """A generator parameter is outside its documented range."""


class DepthTooSmall(Warning):
    """Witness search hit its depth bound; absence claims are relative to it."""

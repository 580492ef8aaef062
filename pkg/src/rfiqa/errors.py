"""Exception hierarchy shared by every rfiqa module.

Data errors (anything a corrupt or ill-formed input can trigger) derive from
:class:`DataError` so the CLI can map them to a single exit code.
"""


class RfiqaError(Exception):
    """Base class for all rfiqa exceptions."""


class DataError(RfiqaError):
    """Invalid data supplied by the caller or read from disk."""


# --- store construction ---

class DuplicateRecordId(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class OrphanDistortedRecord(DataError):
    """Distorted record whose group has no pristine parent (synthetic mode)."""


class MissingMos(DataError):
    pass


# --- store persistence ---

class BadMagic(DataError):
    pass


class UnsupportedVersion(DataError):
    pass


class CorruptManifest(DataError):
    """Manifest and vector file disagree (counts, offsets, or lengths)."""


# --- store transforms ---

class InvalidFactor(DataError):
    pass


class EmptySplit(DataError):
    """A requested split would leave one side without distorted records."""


# --- distances / retrieval ---

class LengthMismatch(DataError):
    pass


class NoEligibleGroups(DataError):
    pass


class UnknownGroup(DataError):
    pass


# --- prediction / statistics ---

class EmptyInstanceList(DataError):
    pass


class DegenerateInput(DataError):
    """Constant input where a correlation needs at least two distinct values."""


class FitDiverged(RfiqaError):
    """Curve fit produced non-finite parameters."""


# --- consistency analysis ---

class InsufficientGroups(DataError):
    pass


class InsufficientAlignment(DataError):
    """Fewer than two (distortion_type, distortion_level) cells shared."""


class MissingAlignment(DataError):
    pass

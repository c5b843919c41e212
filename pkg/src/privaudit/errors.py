"""Exception types raised across the toolkit."""


class PrivauditError(Exception):
    """Base class for all toolkit errors."""


# --- policy page extraction ------------------------------------------------

class MalformedDocument(PrivauditError):
    """No body content could be located in the captured page."""


class EmptyPolicy(PrivauditError):
    """Extraction produced only whitespace."""


# --- snapshot acquisition ---------------------------------------------------

class ArchiveUnavailable(PrivauditError):
    """Transport failure talking to the archive; retryable."""


class NoCaptures(PrivauditError):
    """No snapshot exists anywhere in the requested date range."""


class NoPolicy(PrivauditError):
    """An empty snapshot list was offered for release assignment."""


# --- featurization / classification -----------------------------------------

class EmptyCorpus(PrivauditError):
    """A vocabulary cannot be fitted on an empty corpus."""


class DimensionMismatch(PrivauditError):
    """Feature vector length disagrees with the model's feature space."""


class ModelFormatError(PrivauditError):
    """Serialized model is unreadable or its feature-space hash mismatches."""


# --- static analysis ---------------------------------------------------------

class MalformedManifest(PrivauditError):
    """Manifest input is not parseable, textual XML."""


class MissingPackage(PrivauditError):
    """Manifest lacks a package attribute."""


# --- dynamic analysis ---------------------------------------------------------

class SingleClassCorpus(PrivauditError):
    """Flow classifier training needs both leaking and clean examples."""


# --- compliance ---------------------------------------------------------------

class UnknownDynamicLabel(PrivauditError):
    """A dynamic leak label is absent from the mapping table."""


class MappingTableError(PrivauditError):
    """Mapping table content is invalid (bad names, empty rows, ...)."""


class NotAdjacent(PrivauditError):
    """Version comparison was asked for non-adjacent or misordered releases."""


# --- dataset orchestration ------------------------------------------------------

class ManifestError(PrivauditError):
    """Dataset manifest is missing files or violates uniqueness."""

"""Shared exception types for the merchantry engine."""


class MerchantryError(Exception):
    """Base class for all engine errors."""


class InvalidAmountError(MerchantryError):
    """Negative or otherwise unusable money amount."""


class CatalogError(MerchantryError):
    """Catalog ingest or query failure."""


class EmptyCatalogError(CatalogError):
    """No valid items were found."""


class SplitTooSmallError(CatalogError):
    """Dataset too small to split 80/10/10."""


class BackendError(MerchantryError):
    """Base class for backend faults."""


class BackendUnavailableError(BackendError):
    """Transport kept failing after the retry budget was spent."""


class ProtocolError(BackendError):
    """Provider returned something the wire contract does not allow."""


class FixtureExhaustedError(BackendError):
    """A scripted backend ran out of queued replies."""


class JudgeFailureError(BackendError):
    """Every judge run came back unusable."""


class LeakageError(MerchantryError):
    """Prompt exemplars include the item being appraised."""


class NotEnoughExemplarsError(MerchantryError):
    """Exemplar pool smaller than the requested shot count."""


class SessionStateError(MerchantryError):
    """Operation applied to a session in the wrong state."""


class ConfigError(MerchantryError):
    """Invalid negotiation or run configuration."""


class AnnotationError(MerchantryError):
    """Control annotations in a turn are inconsistent (e.g. accept with no offer)."""


class EmptyInputError(MerchantryError):
    """Metric called on an empty collection."""


class DegenerateVarianceError(MerchantryError):
    """Zero within-group variance; F statistic undefined."""


class SkewnessUndefinedError(MerchantryError):
    """Zero standard deviation; skewness undefined."""

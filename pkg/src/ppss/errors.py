"""Exception types shared across the toolkit."""


class PpssError(Exception):
    """Base class for all toolkit errors."""


class GeometryError(PpssError):
    """Image dimensions, block size, and sub-block size do not fit together."""


class ImageFormatError(PpssError):
    """Input image is not strict 8-bit RGB (or a label map is not 8-bit single-channel)."""


class ManifestError(PpssError):
    """Key or dataset manifest is malformed, tampered, or version-incompatible."""


class MetricsError(PpssError):
    """Metric computation is impossible (e.g. no counted pixels)."""


class InconsistentPairError(PpssError):
    """Plain/cipher pair is not an encryption pair under the declared geometry."""

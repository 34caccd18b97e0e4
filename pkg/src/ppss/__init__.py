"""Keyed block/sub-block pixel shuffling for privacy-preserving semantic
segmentation: the cipher, a dataset pipeline, segmentation scoring, and
privacy analysis tooling."""

from .cipher import (
    BlockGrid,
    apply_subblock,
    decrypt_image,
    encrypt_image,
    invert_subblock,
    partition_geometry,
)
from .errors import (
    GeometryError,
    ImageFormatError,
    InconsistentPairError,
    ManifestError,
    MetricsError,
    PpssError,
)
from .keys import (
    ExplicitKeyProvider,
    ImageKeyManifest,
    KeyDerivationContext,
    SeededKeyProvider,
    SharedKeyProvider,
    SubBlockKey,
    derive_stream_seed,
    derive_subblock_key,
    generate_random_image_key,
    master_fingerprint,
    new_master_seed,
    parse_manifest,
    provider_from_manifest,
    sample_permutation,
    serialize_manifest,
)
from .metrics import accumulate, compute_scores, new_confusion_matrix

__version__ = "0.1.0"

__all__ = [
    "BlockGrid",
    "ExplicitKeyProvider",
    "GeometryError",
    "ImageFormatError",
    "ImageKeyManifest",
    "InconsistentPairError",
    "KeyDerivationContext",
    "ManifestError",
    "MetricsError",
    "PpssError",
    "SeededKeyProvider",
    "SharedKeyProvider",
    "SubBlockKey",
    "accumulate",
    "apply_subblock",
    "compute_scores",
    "decrypt_image",
    "derive_stream_seed",
    "derive_subblock_key",
    "encrypt_image",
    "generate_random_image_key",
    "invert_subblock",
    "master_fingerprint",
    "new_confusion_matrix",
    "new_master_seed",
    "parse_manifest",
    "partition_geometry",
    "provider_from_manifest",
    "sample_permutation",
    "serialize_manifest",
]

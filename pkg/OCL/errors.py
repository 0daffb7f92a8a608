"""Exception hierarchy shared by every OCL module.

Each error carries a stable upper-snake ``code`` (machine readable, printed by
the CLI) and the process ``exit_code`` the CLI should use for it.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class OCLError(Exception):
    code = "OCL_ERROR"
    exit_code = 1

    def __init__(self, message: str, *, code: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        if code:
            self.code = code
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"error": self.code, "kind": type(self).__name__, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


# --- CLI-facing families (distinct exit codes) ---
class MissingInputError(OCLError):
    code = "MISSING_INPUT"
    exit_code = 2


class ConfigError(OCLError):
    code = "INVALID_CONFIG"
    exit_code = 3


class ArtifactVersionError(OCLError):
    code = "ARTIFACT_VERSION_MISMATCH"
    exit_code = 4


# --- domain errors ---
class GeometryError(OCLError):
    code = "GEOMETRY_ERROR"


class PpmFormatError(OCLError):
    code = "PPM_FORMAT_ERROR"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})", details={"offset": offset})
        self.offset = offset


class ModelFormatError(OCLError):
    code = "BING_MODEL_FORMAT"


class ModelVersionError(ModelFormatError, ArtifactVersionError):
    code = "BING_MODEL_VERSION"
    exit_code = 4


class ProposalCacheError(OCLError):
    code = "PROPOSAL_CACHE_ERROR"


class CropError(OCLError):
    code = "CROP_ERROR"


class ManifestError(OCLError):
    code = "MANIFEST_ERROR"


class TrainingError(OCLError):
    code = "TRAINING_ERROR"


class CheckpointError(OCLError):
    code = "CHECKPOINT_ERROR"


class BadMagicError(CheckpointError):
    code = "CHECKPOINT_BAD_MAGIC"


class CheckpointVersionError(CheckpointError, ArtifactVersionError):
    code = "CHECKPOINT_VERSION_MISMATCH"
    exit_code = 4


class ShapeMismatchError(CheckpointError):
    code = "SHAPE_MISMATCH"


class TruncatedFileError(CheckpointError):
    code = "TRUNCATED_FILE"


class MetricError(OCLError):
    code = "METRIC_UNDEFINED"


class LedgerError(OCLError):
    code = "LEDGER_CORRUPT"

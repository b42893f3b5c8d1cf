"""
Pipeline stages and the failures that can stop a trial.
"""

from enum import Enum
from typing import Any, Dict, List, Optional


class Stage(str, Enum):
    """Pipeline stages in execution order."""
    PROCESS = "process"
    ORIENT = "orient"
    CLASSIFY = "classify"
    FIVEINOUT = "fiveinout"
    FACTOR = "factor"
    COMPRESS = "compress"
    MERGE = "merge"
    DONE = "done"

    @property
    def rank(self) -> int:
        return list(Stage).index(self)


class Failure(str, Enum):
    """Frozen failure taxonomy recorded on TrialResult."""
    NONE = "none"
    PROCESS_EXHAUSTED = "process-exhausted"
    CLASSIFICATION_VIOLATION = "classification-violation"
    CONSTRUCTION_DEFICIT = "construction-deficit"
    NO_PERFECT_MATCHING = "no-perfect-matching"
    FACTOR_QUALITY = "factor-quality"
    COMPRESSION_STUCK = "compression-stuck"
    MERGE_FAILED = "merge-failed"
    VERIFY_FAILED = "verify-failed"
    INTERNAL = "internal-error"


class PipelineError(Exception):
    """Base class for failures that abort a trial at a given stage."""

    stage = Stage.PROCESS
    failure = Failure.INTERNAL

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}


class ProcessExhaustedError(PipelineError):
    stage = Stage.PROCESS
    failure = Failure.PROCESS_EXHAUSTED


class ClassificationError(PipelineError):
    stage = Stage.CLASSIFY
    failure = Failure.CLASSIFICATION_VIOLATION


class ConstructionDeficitError(PipelineError):
    stage = Stage.FIVEINOUT
    failure = Failure.CONSTRUCTION_DEFICIT

    def __init__(self, message: str, vertices: List[int], details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.vertices = sorted(vertices)


class MatchingError(PipelineError):
    stage = Stage.FACTOR
    failure = Failure.NO_PERFECT_MATCHING


class FactorQualityError(PipelineError):
    stage = Stage.FACTOR
    failure = Failure.FACTOR_QUALITY


class CompressionStuckError(PipelineError):
    stage = Stage.COMPRESS
    failure = Failure.COMPRESSION_STUCK


class MergeFailedError(PipelineError):
    stage = Stage.MERGE
    failure = Failure.MERGE_FAILED


class OracleRefusedError(ValueError):
    """The exact oracle refuses instances above its size limit."""

"""Exception types shared across the toolkit.

Every validation failure raises a subclass of :class:`VerseError` carrying a
stable ``code`` so the CLI and HTTP service can emit machine-readable errors
without string-matching messages.
"""

from __future__ import annotations


class VerseError(Exception):
    """Base class for all toolkit validation errors."""

    code = "error"


class FormatError(VerseError):
    """Binary container is malformed: bad magic, version, length, truncation."""

    code = "format"


class DuplicateIdError(VerseError):
    code = "duplicate_id"


class NonFiniteError(VerseError):
    code = "non_finite"


class MissingIdColumnError(VerseError):
    code = "missing_id_column"


class ScoreOutOfRangeError(VerseError):
    code = "score_out_of_range"


class UnknownScoreIdError(VerseError):
    code = "unknown_score_id"


class DegenerateInputError(VerseError):
    code = "degenerate_input"


class DimensionTooLargeError(VerseError):
    code = "dimension_too_large"


class DimensionMismatchError(VerseError):
    code = "dimension_mismatch"


class BadKError(VerseError):
    code = "bad_k"


class SingleClusterError(VerseError):
    code = "single_cluster"


class JoinMismatchError(VerseError):
    """Embedding ids and record ids do not line up one-to-one."""

    code = "join_mismatch"

    def __init__(self, missing_records: list[str], missing_embeddings: list[str]):
        self.missing_records = missing_records
        self.missing_embeddings = missing_embeddings
        parts = []
        if missing_records:
            parts.append("ids without records: %s" % ", ".join(missing_records))
        if missing_embeddings:
            parts.append("ids without embeddings: %s" % ", ".join(missing_embeddings))
        super().__init__("; ".join(parts))


class ScoreMissingError(VerseError):
    code = "score_missing"


class EmptyClusterError(VerseError):
    code = "empty_cluster"


class NoAttributionsError(VerseError):
    code = "no_attributions"


class UnknownFeatureError(VerseError):
    code = "unknown_feature"


class MissingRunScoresError(VerseError):
    code = "missing_run_scores"


class UnknownBaselineError(VerseError):
    code = "unknown_baseline"

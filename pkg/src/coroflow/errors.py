"""Exception taxonomy for the analysis pipeline.

Every failure mode raised by this package derives from :class:`CoroflowError`
and carries a machine-readable ``cause`` string so that callers (CLI, HTTP
service) can map failures onto a small, stable set of categories without
parsing messages.
"""

from __future__ import annotations

# Stable cause categories surfaced at the CLI / service boundary.
CAUSE_INVALID_GEOMETRY = "invalid_geometry"
CAUSE_POOR_IMAGE_QUALITY = "poor_image_quality_or_vessel_overlap"
CAUSE_INVALID_INPUT = "invalid_input"
CAUSE_INVALID_BUNDLE = "invalid_case_bundle"
CAUSE_INSUFFICIENT_DATA = "insufficient_data"


class CoroflowError(Exception):
    """Base class for all analysis failures."""

    cause = CAUSE_INVALID_INPUT


# --- lumen geometry -------------------------------------------------------

class EmptyMask(CoroflowError):
    """Lumen mask contains no foreground pixels."""

    cause = CAUSE_INVALID_GEOMETRY


class DegenerateSkeleton(CoroflowError):
    """Skeletonisation produced no usable centreline (fewer than two samples
    or no endpoint pair)."""

    cause = CAUSE_INVALID_GEOMETRY


class CenterlineOutsideMask(CoroflowError):
    """A centreline point fell on a background pixel."""

    cause = CAUSE_INVALID_GEOMETRY


class NonPositiveOverride(CoroflowError):
    """An operator-supplied reference diameter must be strictly positive."""


class NonPositiveDiameter(CoroflowError):
    """A lumen diameter sample is zero or negative."""

    cause = CAUSE_INVALID_GEOMETRY


# --- relative flow capacity ------------------------------------------------

class MissingReference(CoroflowError):
    """A reference diameter is required but was neither estimated nor
    supplied."""


class InconsistentInputs(CoroflowError):
    """Paired profiles disagree in length or sampling step."""


# --- hemodynamics ----------------------------------------------------------

class NoArrival(CoroflowError):
    """Contrast front never reached the distal reference point."""

    cause = CAUSE_POOR_IMAGE_QUALITY


class NonMonotoneFront(CoroflowError):
    """Tracked contrast front regressed by more than the tolerated fraction
    of vessel length, indicating unusable frames."""

    cause = CAUSE_POOR_IMAGE_QUALITY


class NonPositiveRatio(CoroflowError):
    """An area ratio handed to the loss-coefficient model must be > 0."""


class EmptyDaughters(CoroflowError):
    """A branch flow split needs at least one daughter radius."""


# --- virtual stenting ------------------------------------------------------

class SpanOutOfRange(CoroflowError):
    """Stent landing points must lie inside the analysed segment."""


class SpanTooShortForEdges(CoroflowError):
    """Stent span is shorter than the two transition edges combined."""


# --- calibration and statistics --------------------------------------------

class EmptyCohort(CoroflowError):
    """Calibration requires at least one case with a reference measurement."""

    cause = CAUSE_INSUFFICIENT_DATA


class NoInteriorMinimum(CoroflowError):
    """Calibration objective is minimised at the search boundary."""

    cause = CAUSE_INSUFFICIENT_DATA


class InsufficientData(CoroflowError):
    """Too few observations for the requested statistic."""

    cause = CAUSE_INSUFFICIENT_DATA


class ZeroVariance(CoroflowError):
    """A correlation or regression was requested on a constant series."""

    cause = CAUSE_INSUFFICIENT_DATA


class DegenerateLabels(CoroflowError):
    """Classification metrics need both a positive and a negative case."""

    cause = CAUSE_INSUFFICIENT_DATA


# --- case bundles ----------------------------------------------------------

class GeometryOverflow(CoroflowError):
    """Synthetic vessel does not fit inside the requested image size."""


class MissingManifest(CoroflowError):
    """Case directory has no manifest file."""

    cause = CAUSE_INVALID_BUNDLE


class SchemaViolation(CoroflowError):
    """Manifest or request payload failed schema validation."""

    cause = CAUSE_INVALID_BUNDLE


class AnisotropicSpacing(CoroflowError):
    """Pixel spacing must be identical along both image axes."""

    cause = CAUSE_INVALID_BUNDLE

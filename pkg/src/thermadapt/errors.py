"""Exception and warning types shared across the package."""


class PipelineError(Exception):
    """Base class for every domain error raised by this package."""


# --- dataset ---

class MalformedXml(PipelineError):
    """Annotation XML is not well-formed."""


class MissingField(PipelineError):
    """A required element is absent from an annotation or detections file."""


class DegenerateBox(PipelineError):
    """Box violates xmax > xmin, ymax > ymin or has negative coordinates."""


class BoxOutsideFrame(PipelineError):
    """Box extends beyond the annotated image frame."""


class MissingAnnotation(PipelineError):
    """A labelled domain lacks the annotation XML for an image."""


class DimensionMismatch(PipelineError):
    """Annotated size disagrees with the decoded image size."""


class EmptyIntersection(PipelineError):
    """Two domains share no image ids; probably the wrong folders."""


class IdCollision(PipelineError):
    """Two records in one domain ended up with the same image id."""


# --- imagegen ---

class MissingTranslation(PipelineError):
    """A source image has no counterpart in the translated-images folder."""


# --- evaluation ---

class UndefinedAP(PipelineError):
    """AP is undefined because the class has no (non-difficult) ground truth."""


class NoDefinedClasses(PipelineError):
    """Every class has an undefined AP; there is nothing to average."""


# --- ablation harness ---

class InvalidCombination(PipelineError):
    """A grid row requires a stage hook or path that is not configured."""


class UnresolvedPlaceholder(PipelineError):
    """A hook command template references a placeholder with no binding."""


class HookFailed(PipelineError):
    """A stage hook exited with nonzero status or timed out."""


class MissingOutput(PipelineError):
    """A stage hook exited 0 but did not produce its contract artifact."""


# --- synth ---

class PlacementFailure(PipelineError):
    """Could not place the requested number of objects in the frame."""


# --- warnings (reported, not fatal) ---

class ConstantReference(UserWarning):
    """Histogram-match reference has a single intensity; remap degenerates."""


class UnknownClass(UserWarning):
    """Detections carry a class absent from the target label set."""

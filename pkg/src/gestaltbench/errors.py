"""Exception hierarchy. Every error carries a machine-readable category
that the CLI echoes on stderr."""


class GestaltError(Exception):
    category = "error"


class PlacementError(GestaltError):
    """An object could not be placed within bounds/separation constraints."""

    category = "placement"


class GenerationError(GestaltError):
    """A generator exhausted its retry budget."""

    category = "generation"


class DecodeError(GestaltError):
    category = "decode"


class DataError(GestaltError):
    """Invalid or missing dataset artifacts (manifests, files, specs)."""

    category = "data"


class EvaluationError(GestaltError):
    category = "evaluation"


class OracleError(GestaltError):
    """An oracle cannot produce a verdict for this image."""

    category = "oracle"


class AlignmentError(GestaltError):
    category = "alignment"


class FusionError(GestaltError):
    category = "fusion"


class TrainingError(GestaltError):
    category = "training"


class ProtocolError(GestaltError):
    """A trial-session operation was invalid in the current phase."""

    category = "protocol"

# src/Core/Models/errors.py
# Every failure the sandbox raises on purpose derives from RelationNetError.
# The CLI maps the two families below onto exit codes 1 and 2.


class RelationNetError(Exception):
    """Base class for all sandbox errors."""


class ValidationFailure(RelationNetError):
    """Bad input, configuration or file. CLI exit code 1."""


class NumericFailure(RelationNetError):
    """Numbers went wrong. CLI exit code 2."""


class DimensionError(ValidationFailure, ValueError):
    """Shapes, channel counts or broadcast patterns do not line up."""


class PrecisionError(ValidationFailure, TypeError):
    """float32 and float64 tensors met in one graph."""


class UsageError(ValidationFailure):
    """API called the wrong way (backward on a non-scalar, unknown selector)."""


class EmptyAttentionError(ValidationFailure):
    """Attention over zero instances is undefined; callers skip N = 0."""


class ConfigurationError(ValidationFailure, ValueError):
    """A configuration value, key or toggle combination is invalid."""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class FormatError(ValidationFailure):
    """A checkpoint file is malformed."""


class MetricError(ValidationFailure):
    """A metric is undefined for the given input."""


class SceneGenerationError(ValidationFailure):
    """Person placement could not be satisfied."""


class NumericError(NumericFailure, ArithmeticError):
    """NaN/Inf reached an op boundary or a probability left (0, 1)."""


class TrainingDivergedError(NumericFailure):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, *, scene_seed: int, step: int):
        self.scene_seed = scene_seed
        self.step = step
        super().__init__(f"{message} (step {step}, scene seed {scene_seed})")


class GradientCheckFailed(NumericFailure):
    """At least one tensor's analytic gradient disagreed with finite differences."""

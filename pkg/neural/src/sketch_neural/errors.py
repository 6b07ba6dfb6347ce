"""Error types with explicit statuses for the CLI."""


class NeuralError(Exception):
    pass


class ConfigError(NeuralError):
    pass


class DataError(NeuralError):
    """Batch/shape inconsistency between tensors that must be paired."""


class SchemaError(NeuralError):
    """Sidecar record violates the documented JSONL schema."""


class NotTrainedError(NeuralError):
    """Generation refused: the model has no training steps."""


class ScorerUnavailable(NeuralError):
    """No pretrained scorer backend is available locally."""

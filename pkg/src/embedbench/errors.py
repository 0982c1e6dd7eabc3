class EmbedBenchError(Exception):
    pass


class IngestionError(EmbedBenchError):
    """Dataset files are missing or malformed."""


class SplitError(EmbedBenchError):
    """Labels cannot be stratified or binned."""


class NumericalError(EmbedBenchError):
    """A dense linear-algebra routine failed to converge."""


class NonFiniteError(EmbedBenchError):
    """A tape operation produced NaN or Inf."""


class ShapeError(EmbedBenchError, ValueError):
    pass

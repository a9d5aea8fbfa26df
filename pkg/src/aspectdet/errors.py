"""Error classes shared across the pipeline, mapped to CLI exit codes."""


class PipelineError(Exception):
    """Base class; exit_code drives the CLI's process status."""

    exit_code = 1


class ConfigError(PipelineError):
    """Bad configuration value, unknown key, or conflicting artifacts."""

    exit_code = 2


class MissingArtifactError(PipelineError):
    """A required input artifact does not exist."""

    exit_code = 3


class NumericError(PipelineError):
    """NaN/inf or degenerate numeric state (zero-norm vector, empty cluster)."""

    exit_code = 4


class SchemaError(PipelineError):
    """An artifact exists but violates its file schema or invariants."""

    exit_code = 5

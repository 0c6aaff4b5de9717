"""Exception types shared across the workbench."""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class ParseError(WorkbenchError):
    """CSV or document parsing failed; message carries the line number."""


class SchemaMismatchError(WorkbenchError):
    """Input columns do not match the schema an estimator was fitted on."""


class BindingError(WorkbenchError):
    """A parameter configuration does not resolve a pipeline spec."""


class MetricUndefinedError(WorkbenchError):
    """The metric is undefined on the given inputs (e.g. single-class AUC)."""


class UnsupportedMethodError(WorkbenchError):
    """The requested importance method does not apply to this estimator."""


class FingerprintMismatchError(WorkbenchError):
    """A stored dataset fingerprint does not match the file on disk."""


class ConfigError(WorkbenchError):
    """Run configuration failed validation.

    Attributes:
        errors: list of (dotted key path, message) pairs.
    """

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        lines = "; ".join(f"{path}: {msg}" if path else msg for path, msg in self.errors)
        super().__init__(f"invalid configuration: {lines}")

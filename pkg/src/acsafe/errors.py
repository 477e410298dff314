"""Exception hierarchy."""


class AcsafeError(Exception):
    """Base class for all errors raised by this package."""


class DslError(AcsafeError):
    """Syntax or resolution error in a model / condition text."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self._format())

    def _format(self):
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(str(self.line))
            if self.column is not None:
                where.append(str(self.column))
        if where:
            return f"{':'.join(where)}: {self.message}"
        return self.message


class SchemaError(AcsafeError):
    """A model, state or command violates its component schema."""


class EvalError(AcsafeError):
    """A condition or update cannot be evaluated (undeclared component, unbound variable, ...)."""


class SafetySpecError(AcsafeError):
    """A safety target does not fit the model it is checked against."""


class HookError(AcsafeError):
    """No analysis hooks are available for a (model, safety kind) pair."""

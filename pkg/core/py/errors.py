class FilscriptError(Exception):
    """Base class for every error raised by the analysis pipeline."""

    exit_code = 1

    def __init__(self, message, source=None):
        self.source = source
        prefix = f"{source}: " if source else ""
        super().__init__(f"{prefix}{message}")


class InputError(FilscriptError):
    """Bad content in a corpus, lexicon or model file (exit status 1)."""

    exit_code = 1


class ConfigError(FilscriptError):
    """Bad run configuration (exit status 2)."""

    exit_code = 2


class ParseError(InputError):
    """
    Malformed file syntax or schema.

    Either `line`/`column` (JSON syntax errors) or `path` (schema errors,
    e.g. "threads.0.messages.2.body") locates the problem.
    """

    def __init__(self, message, source=None, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if path:
            where.append(f"at {path}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message, source)


class DuplicateId(InputError):
    pass


class DanglingParent(InputError):
    pass


class MultipleRoots(InputError):
    pass


class CyclicReplies(InputError):
    pass


class InvalidRule(InputError):
    pass


class IncompleteModels(InputError):
    pass


class InvalidWeight(InputError):
    pass


class InvalidReference(InputError):
    pass


class UnknownThread(InputError):
    pass


class MissingScript(InputError):
    pass


class InvalidThresholds(ConfigError):
    pass


class UnreadablePath(ConfigError):
    pass

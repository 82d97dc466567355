"""Exception hierarchy.

Data errors (bad input files) and usage errors (bad calls or configuration)
are kept apart so the CLI can map them to distinct exit codes.
"""


class ToolLinkError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ToolLinkError):
    """Input data is malformed or inconsistent."""


class UsageError(ToolLinkError):
    """An operation was called with arguments that violate its contract."""


class ConfigError(UsageError):
    """A run configuration failed validation.

    ``problems`` holds every individual finding so they can all be reported at once.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


class KBParseError(DataError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class DuplicateEntryError(KBParseError):
    pass


class BratError(DataError):
    """Any problem with a BRAT standoff document."""


class BratParseError(BratError):
    pass


class IntegrityError(BratError):
    """An annotation's recorded surface does not match the text at its offsets."""


class ProcessParseError(DataError):
    pass

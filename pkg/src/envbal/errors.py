"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class EnvbalError(Exception):
    exit_code = 1


class DataError(EnvbalError):
    """Input file could not be parsed or violates dataset invariants."""

    exit_code = 2


class ConfigError(EnvbalError):
    """Invalid parameters or a method precondition that the input does not meet."""

    exit_code = 3


class GenerationError(EnvbalError):
    exit_code = 4


class SplitError(EnvbalError):
    """A stratified split would leave a class without instances."""

    exit_code = 5

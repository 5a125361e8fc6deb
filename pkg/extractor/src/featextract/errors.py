class ExtractError(Exception):
    """Base error; exit_code drives the CLI exit status."""

    exit_code = 1


class ImageError(ExtractError):
    """Bad image content (zero area, wrong mode)."""

    exit_code = 2


class SetupError(ExtractError):
    """Missing prerequisites such as pretrained weights."""

    exit_code = 3


class IOFailure(ExtractError):
    exit_code = 4

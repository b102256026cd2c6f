"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DecodeError and
OSError -> 2, DataError and plain ValueError -> 3.
"""


class ConfigError(Exception):
    """Invalid configuration or incompatible option combination."""


class DecodeError(ValueError):
    """Malformed image or model file; names where the fault sits.

    `offset` is a byte offset (int) for binary formats or a location
    string such as "model.txt line 7" for line-oriented ones.
    """

    def __init__(self, offset, reason: str):
        self.offset = offset
        self.reason = reason
        where = f"byte {offset}" if isinstance(offset, int) else str(offset)
        super().__init__(f"{where}: {reason}")


class DataError(ValueError):
    """Dataset or model content that fails validation."""

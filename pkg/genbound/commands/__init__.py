"""CLI command modules."""

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

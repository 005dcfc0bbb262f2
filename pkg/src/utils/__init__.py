"""Utility modules for formatting, artifact I/O and logging."""

from src.utils.formatters import format_paths, format_score_table
from src.utils.io import validate_input_file
from src.utils.logging import setup_logging

__all__ = [
    "format_paths",
    "format_score_table",
    "validate_input_file",
    "setup_logging",
]

"""
Utility functions shared by the PWLA toolkit

This module provides helpers that complement the numerical modules,
including logging setup, atomic output files, seed handling and
number formatting for tables.
"""

import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np


LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

DATA_DIR_ENV = "PWLA_DATA_DIR"


class ConfigError(ValueError):
    """Raised for invalid flags, method tags, policies or shapes supplied by the caller"""


def setup_logging(verbose: bool = False) -> None:
    """
    Configure the root logger once for command-line use

    Args:
        verbose (bool): Log INFO messages when True, only warnings otherwise
    """
    level = logging.INFO if verbose else logging.WARNING
    root = logging.getLogger()
    # Repeated calls replace our own handler only
    for handler in [h for h in root.handlers if getattr(h, "pwla_cli", False)]:
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.pwla_cli = True
    root.addHandler(handler)
    root.setLevel(level)


def as_rng(seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    """
    Turn a seed (or an existing generator) into a numpy Generator

    Args:
        seed: Integer seed, Generator instance, or None for OS entropy

    Returns:
        np.random.Generator: Generator to draw from
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """
    Write text to a file so that readers never see a partial result

    The content goes to a temporary file in the target directory first and is
    renamed over the destination only after a successful write.

    Args:
        path: Destination file path
        text (str): Content to write

    Returns:
        Path: The destination path
    """
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        # Leave nothing behind on failure
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def default_data_dir() -> Optional[Path]:
    """
    Directory holding the UCI data files, taken from PWLA_DATA_DIR

    Returns:
        Optional[Path]: The directory, or None when the variable is unset
    """
    value = os.environ.get(DATA_DIR_ENV)
    return Path(value) if value else None


def find_data_file(data_dir: Optional[Path], candidates: Iterable[str]) -> Optional[Path]:
    """
    Return the first existing file among candidate names in a directory

    Args:
        data_dir: Directory to search (None means nothing is found)
        candidates: File names in order of preference

    Returns:
        Optional[Path]: Existing file path or None
    """
    if data_dir is None:
        return None
    for name in candidates:
        path = Path(data_dir) / name
        if path.is_file():
            return path
    return None


def format_percent(value: Optional[float]) -> str:
    """Render a [0,1] ratio the way the comparison tables do ("92.00%")"""
    if value is None:
        return "-"
    return f"{value * 100:.2f}%"


def format_number(value: Optional[float], digits: int = 3) -> str:
    """Fixed-point rendering with a dash for missing values"""
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def format_epochs(value: Optional[float]) -> str:
    """Whole epoch counts without decimals, fold averages with one"""
    if value is None:
        return "-"
    return str(int(value)) if float(value).is_integer() else f"{value:.1f}"


def render_columns(headers: list, rows: list) -> str:
    """
    Align rows of strings under headers as a plain-text table

    Args:
        headers (list): Column titles
        rows (list): Rows, each a list of cell strings

    Returns:
        str: Table text with a ruled header, ending in a newline
    """
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    def line(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()

    out = [line(headers), "  ".join("-" * w for w in widths)]
    out.extend(line(row) for row in rows)
    return "\n".join(out) + "\n"

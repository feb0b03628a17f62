import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd


def inclusive_range(lo: float, hi: float, step: float) -> list[float]:
    """lo, lo + step, ... up to hi, hi included when it lies on the lattice."""
    if step <= 0:
        raise ValueError(f"Step must be positive, got {step}")
    if hi < lo:
        raise ValueError(f"Upper bound {hi} below lower bound {lo}")

    # small slack so that 80:130:5 lands exactly on 130
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1

    return [lo + i * step for i in range(count)]


def parse_range(text: str) -> list[float]:
    """Parse an inclusive ``lo:hi:step`` range.

    Args:
        text (str): The range, e.g. "80:130:5".

    Returns:
        list[float]: lo, lo + step, ..., hi (hi included when on the lattice).

    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"Expected lo:hi:step, got {text!r}")

    try:
        lo, hi, step = (float(p) for p in parts)
        return inclusive_range(lo, hi, step)
    except ValueError as error:
        raise ValueError(f"Invalid range {text!r}: {error}") from error


def parse_grid(text: str) -> tuple[float, float, float, float, float]:
    """Parse an ``x0:x1:y0:y1:step`` grid description."""
    parts = text.split(":")
    if len(parts) != 5:
        raise ValueError(f"Expected x0:x1:y0:y1:step, got {text!r}")

    return tuple(float(p) for p in parts)


def sha256_text(text: str) -> str:
    """Hash a text document the way manifests record it."""
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def atomic_write_bytes(path: Path, data: bytes) -> Path:
    """Write a file through a temporary sibling and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

    return path


def atomic_write_text(path: Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def custom_sort(df: pd.DataFrame, col: str, custom_list: list) -> pd.DataFrame:
    """Custom sort function for a DataFrame column.

    Rows whose value is in ``custom_list`` come first, in list order; the rest
    follow in string order. The sort is stable within equal keys.

    Args:
        df (pd.DataFrame): The DataFrame to sort.
        col (str): The column name to sort by.
        custom_list (list): The custom order for sorting.

    Returns:
        The sorted DataFrame.

    """

    def sorting_key(value):
        # If the value is in the custom list, return its index, otherwise return a large number
        return (
            custom_list.index(value) if value in custom_list else len(custom_list),
            str(value),
        )

    order = sorted(range(len(df)), key=lambda i: sorting_key(df[col].iloc[i]))
    return df.iloc[order].reset_index(drop=True)


def unit(vector) -> np.ndarray:
    """Normalize a 3-vector."""
    vector = np.asarray(vector, dtype=float)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ValueError("Cannot normalize a zero vector")

    return vector / norm

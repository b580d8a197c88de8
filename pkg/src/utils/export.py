"""
CSV/JSON emission helpers with round-trip float formatting.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

logger = logging.getLogger(__name__)


def format_float(value: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(value))


def format_word(letters: Sequence[int], offset: int = 0) -> str:
    """Serialize a word as ``2,1,2@0``."""
    return ",".join(str(int(s)) for s in letters) + f"@{int(offset)}"


def parse_word(text: str) -> tuple[tuple[int, ...], int]:
    """
    Parse ``2,1,2@0`` into letters and offset.

    Raises:
        ValueError: if the text is not a word literal
    """
    body, _, offset = text.strip().partition("@")
    letters = tuple(int(s) for s in body.split(",") if s.strip()) if body.strip() else ()
    return letters, int(offset) if offset else 0


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Path, comment: Optional[str], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Write a CSV file with an optional ``#`` comment line and a column header.

    Args:
        path: Output file
        comment: Metadata line written after ``# ``
        header: Column names
        rows: Row tuples; floats use repr formatting

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if comment is not None:
            f.write(f"# {comment}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def write_json(path: Path, payload: Any) -> Path:
    """Write JSON with sorted keys so reruns compare byte for byte."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")
    return path

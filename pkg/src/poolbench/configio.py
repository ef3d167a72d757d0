"""Line-oriented ``key = value`` block files.

Manifests, suite configuration files, and other structured text inputs
share one trivial format: blocks of ``key = value`` lines separated by
blank lines, with ``#`` comment lines ignored.  Values are plain strings;
interpretation is the caller's job.
"""

from __future__ import annotations

from .errors import RecordParseError


def parse_blocks(text: str) -> list[dict[str, str]]:
    """Parse block text into one ordered dict per block."""
    blocks: list[dict[str, str]] = []
    current: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            if current:
                blocks.append(current)
                current = {}
            continue
        if line.startswith("#"):
            continue
        if "=" not in line:
            raise RecordParseError(f"expected 'key = value', got {line!r}", line_no=line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise RecordParseError("empty key", line_no=line_no)
        if key in current:
            raise RecordParseError(f"duplicate key {key!r} in block", line_no=line_no)
        current[key] = value.strip()
    if current:
        blocks.append(current)
    return blocks


def format_blocks(blocks: list[dict[str, str]]) -> str:
    chunks = []
    for block in blocks:
        chunks.append("\n".join(f"{k} = {v}" for k, v in block.items()))
    return "\n\n".join(chunks) + "\n"


def parse_bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise RecordParseError(f"key {key!r}: expected a boolean, got {value!r}")

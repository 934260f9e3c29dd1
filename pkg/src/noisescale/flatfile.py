"""Flat key = value text files.

One assignment per line, `#` starts a comment, blank lines ignored. Keys
are bare words; values run to the end of the line and keep internal
whitespace (numeric vector values are whitespace separated). This is the
on-disk format for both run configuration and quadratic model files.
"""

from __future__ import annotations

from pathlib import Path

from .exceptions import DataFormatError


def parse_flat_kv(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse flat key = value text into an ordered dict of strings.

    Raises DataFormatError with the 1-based line number on a line that is
    neither blank, comment, nor assignment, and on duplicate keys.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFormatError(
                f"{source}: line {lineno}: expected 'key = value', got {raw.strip()!r}"
            )
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or " " in key:
            raise DataFormatError(f"{source}: line {lineno}: bad key {key!r}")
        if key in out:
            raise DataFormatError(f"{source}: line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_flat_kv(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    return parse_flat_kv(text, source=str(path))


def dump_flat_kv(pairs: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs.items())

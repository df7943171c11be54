"""Flat ``key = value`` config text parsing shared by the parameter loader and CLI.

Format: one assignment per line, ``#`` starts a comment, blank lines ignored,
UTF-8.  Dotted keys (``sim.dt``) express nesting without structure.  Parsing
is strict and reports every violation, not just the first.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Configuration problem; carries the full list of violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse key=value lines into an ordered mapping of raw string values."""
    out: dict[str, str] = {}
    problems: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            problems.append(f"line {lineno}: empty key")
            continue
        if key in out:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        out[key] = value
    if problems:
        raise ConfigError(problems)
    return out


def serialize_kv(mapping: dict[str, str]) -> str:
    """Render a mapping back to config text, keys sorted for determinism."""
    return "".join(f"{k} = {mapping[k]}\n" for k in sorted(mapping))

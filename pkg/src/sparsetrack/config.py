"""Flat ``key = value`` configuration files (INI style, section header optional)."""
import ast
import configparser
from pathlib import Path

from .errors import SparseTrackError


class ConfigError(SparseTrackError, ValueError):
    """A configuration file or value is invalid."""


def parse_flat(text, source="<config>"):
    """Parse flat key-value text into a dict of raw strings.

    Section headers are accepted and ignored, so the same file can be read
    by other INI tooling.  Keys are lower-cased; ``#`` and ``;`` start comments.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    body = text if text.lstrip().startswith("[") else "[config]\n" + text
    try:
        parser.read_string(body, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.strip().lower()] = value.strip()
    return out


def load_flat(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_flat(text, str(path))


def coerce(value):
    """Interpret a raw config string as a Python literal when possible."""
    lowered = value.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("inf", "+inf"):
        return float("inf")
    try:
        return ast.literal_eval(value)
    except (ValueError, SyntaxError):
        return value


def dump_flat(mapping):
    lines = []
    for key, value in mapping.items():
        if isinstance(value, float):
            value = format(value, ".17g")
        elif isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"

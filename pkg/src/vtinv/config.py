"""Shared text configuration format.

One ``key = value`` pair per line, ``#`` starts a comment, blank lines are
ignored.  Keys are namespaced with a dotted prefix so a single file can
configure every module, e.g.::

    # desk setup
    model.neutral_length_cm = 17.5
    acoustic.grid_step_hz   = 10
    build.max_depth         = 4

Values are parsed by the consuming dataclass (int, float, or string).
Unknown keys inside a known namespace raise :class:`ConfigError`; keys in
foreign namespaces are ignored so one file can serve all subcommands.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a flat string-to-string mapping."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        out[key] = value
    return out


def read_config(path: str | Path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text())


def namespace(mapping: dict[str, str], prefix: str) -> dict[str, str]:
    """Extract keys under ``prefix.`` with the prefix stripped."""
    head = prefix + "."
    return {k[len(head):]: v for k, v in mapping.items() if k.startswith(head)}


def coerce_fields(cls, raw: dict[str, str], *, where: str):
    """Coerce string values onto the typed fields of dataclass ``cls``.

    Returns a kwargs dict for the fields present in ``raw``.  Field types
    are taken from the dataclass definition (int, float, str).
    """
    import dataclasses

    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, text in raw.items():
        if key not in fields:
            raise ConfigError(f"{where}: unknown key {key!r}")
        ftype = fields[key].type
        try:
            if ftype in ("int", int):
                kwargs[key] = int(text)
            elif ftype in ("float", float):
                kwargs[key] = float(text)
            else:
                kwargs[key] = text
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {text!r}") from exc
    return kwargs

"""Session scripts: one JSON tool record per line.

Each line is an object {"tool": name, ...params} matching that tool's
schema. Writing is deterministic (sorted keys, compact separators), so
write(read(write(s))) is byte-identical to write(s).
"""
from __future__ import annotations

import json

from ..errors import InvalidParams, ParseError, UnknownTool
from ..toolbox import ToolInvocation, validate_invocation


def read_script(path) -> list:
    """Load a script; every record is validated against its tool schema.

    Raises UnknownTool or InvalidParams carrying the offending line number.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                raw = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ParseError("bad JSON: %s" % exc.msg, path=path, line=lineno)
            if not isinstance(raw, dict) or "tool" not in raw:
                raise ParseError('record needs a "tool" field', path=path, line=lineno)
            tool = raw["tool"]
            params = {k: v for k, v in raw.items() if k != "tool"}
            record = ToolInvocation(tool, params)
            try:
                validate_invocation(record)
            except UnknownTool as exc:
                raise UnknownTool(str(exc), path=path, line=lineno)
            except InvalidParams as exc:
                raise InvalidParams(str(exc), path=path, line=lineno)
            records.append(record)
    return records


def write_script(script, path) -> None:
    """Write records in the line format read_script accepts."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in script:
            body = dict(record.params)
            body["tool"] = record.tool
            fh.write(json.dumps(body, sort_keys=True, separators=(",", ":")) + "\n")

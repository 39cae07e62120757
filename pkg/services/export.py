"""CSV and JSON formats for sample sequences, result tables and run manifests.

CSV files carry metadata as ``# key: <json>`` comment lines. A sample
sequence is followed by a ``value`` header and one vertex per line. A
result document holds one or more tables, each introduced by
``# table: <name>`` and a header row. JSON uses a top-level
``{"meta": ..., "data": ...}`` object; ``data`` is the list of values for a
sequence and a ``{name: {"columns", "rows"}}`` mapping for a document.
Floats in CSV are written with 17 significant digits.
"""

import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from services import __version__
from services.errors import SequenceParseError, ValidationError
from services.protocols import SampleSequence, SequenceMeta

LOGGER = logging.getLogger(__name__)

FORMATS = ("csv", "json")
SEQUENCE_HEADER = "value"
TABLE_MARKER = "table"


@dataclass
class Table:
    name: str
    columns: List[str]
    rows: List[List[Any]]


@dataclass
class Document:
    meta: Dict[str, Any]
    tables: List[Table] = field(default_factory=list)

    def table(self, name: str) -> Table:
        for table in self.tables:
            if table.name == name:
                return table
        raise KeyError(name)


@dataclass
class RunManifest:
    command: str
    parameters: Dict[str, Any]
    argv: List[str]
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        try:
            return cls(
                command=data["command"],
                parameters=dict(data["parameters"]),
                argv=list(data["argv"]),
                version=data.get("version", __version__),
                timestamp=data.get("timestamp", ""),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"manifest is missing field {exc}") from exc


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValidationError(f"unknown format '{fmt}' (use one of {', '.join(FORMATS)})")


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(item) for item in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    return value


def format_cell(value: Any) -> str:
    value = _jsonable(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if value is None:
        return ""
    return str(value)


def parse_cell(token: str) -> Any:
    if token == "true":
        return True
    if token == "false":
        return False
    if token == "":
        return None
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def _meta_lines(meta: Dict[str, Any]) -> List[str]:
    return [f"# {key}: {json.dumps(_jsonable(value), sort_keys=True)}" for key, value in meta.items()]


def _parse_meta_line(line: str, number: int) -> tuple:
    body = line[1:].strip()
    key, sep, raw = body.partition(":")
    if not sep or not key.strip():
        raise SequenceParseError(f"malformed metadata comment '{line}'", number)
    try:
        return key.strip(), json.loads(raw.strip())
    except json.JSONDecodeError as exc:
        raise SequenceParseError(f"metadata value for '{key.strip()}' is not JSON: {exc.msg}", number) from exc


def write_sequence(seq: SampleSequence, fmt: str = "csv") -> str:
    _check_format(fmt)
    meta = seq.meta.to_dict()
    if fmt == "json":
        return json.dumps({"meta": meta, "data": [int(v) for v in seq.values]}) + "\n"
    lines = _meta_lines(meta)
    lines.append(SEQUENCE_HEADER)
    lines.extend(str(int(v)) for v in seq.values)
    return "\n".join(lines) + "\n"


def _sequence_from_parts(meta: Dict[str, Any], values: Sequence[int], line: Optional[int] = None) -> SampleSequence:
    try:
        return SampleSequence(values=np.asarray(values, dtype=np.int64), meta=SequenceMeta.from_dict(meta))
    except (ValidationError, TypeError) as exc:
        raise SequenceParseError(str(exc), line) from exc


def read_sequence(text: str) -> SampleSequence:
    """Parse a sequence written by write_sequence (format is detected)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SequenceParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
        if not isinstance(payload, dict) or "meta" not in payload or not isinstance(payload.get("data"), list):
            raise SequenceParseError("JSON sequence needs 'meta' and a 'data' list", 1)
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in payload["data"]):
            raise SequenceParseError("JSON sequence 'data' must hold integers", 1)
        return _sequence_from_parts(payload["meta"], payload["data"])

    meta: Dict[str, Any] = {}
    values: List[int] = []
    header_seen = False
    last_line = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        last_line = number
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                raise SequenceParseError("metadata comment after the value header", number)
            key, value = _parse_meta_line(line, number)
            meta[key] = value
            continue
        if not header_seen:
            if line != SEQUENCE_HEADER:
                raise SequenceParseError(f"expected header '{SEQUENCE_HEADER}', found '{line}'", number)
            header_seen = True
            continue
        try:
            value = int(line)
        except ValueError as exc:
            raise SequenceParseError(f"'{line}' is not an integer vertex", number) from exc
        nodes = meta.get("nodes")
        if isinstance(nodes, int) and not 0 <= value < nodes:
            raise SequenceParseError(f"vertex {value} outside [0, {nodes - 1}]", number)
        values.append(value)

    if not header_seen:
        raise SequenceParseError(f"missing '{SEQUENCE_HEADER}' header", last_line or 1)
    return _sequence_from_parts(meta, values, last_line)


def write_document(doc: Document, fmt: str = "csv") -> str:
    _check_format(fmt)
    if fmt == "json":
        payload = {
            "meta": _jsonable(doc.meta),
            "data": {table.name: {"columns": table.columns, "rows": _jsonable(table.rows)} for table in doc.tables},
        }
        return json.dumps(payload, indent=2) + "\n"

    lines = _meta_lines(doc.meta)
    for table in doc.tables:
        lines.append(f"# {TABLE_MARKER}: {json.dumps(table.name)}")
        lines.append(",".join(table.columns))
        lines.extend(",".join(format_cell(cell) for cell in row) for row in table.rows)
    return "\n".join(lines) + "\n"


def read_document(text: str) -> Document:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SequenceParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
        tables = [
            Table(name=name, columns=list(body["columns"]), rows=[list(row) for row in body["rows"]])
            for name, body in payload.get("data", {}).items()
        ]
        return Document(meta=payload.get("meta", {}), tables=tables)

    doc = Document(meta={})
    current: Optional[Table] = None
    expect_header = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, value = _parse_meta_line(line, number)
            if key == TABLE_MARKER:
                current = Table(name=str(value), columns=[], rows=[])
                doc.tables.append(current)
                expect_header = True
            elif current is not None:
                raise SequenceParseError("metadata comment inside a table", number)
            else:
                doc.meta[key] = value
            continue
        if current is None:
            raise SequenceParseError("data row before any table marker", number)
        cells = line.split(",")
        if expect_header:
            current.columns = cells
            expect_header = False
            continue
        if len(cells) != len(current.columns):
            raise SequenceParseError(
                f"row has {len(cells)} cells, table '{current.name}' has {len(current.columns)} columns", number
            )
        current.rows.append([parse_cell(cell) for cell in cells])
    return doc


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def emit(text: str, out: Optional[str], manifest: Optional[RunManifest] = None) -> Optional[Path]:
    """Write ``text`` to ``out`` (stdout when None or '-') plus the manifest sidecar."""
    if not out or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return None

    path = Path(out)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    if manifest is not None:
        manifest_path(path).write_text(manifest.to_json(), encoding="utf-8")
    LOGGER.info("Wrote %s (%d bytes)", path, len(text.encode("utf-8")))
    return path


def read_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise SequenceParseError(f"manifest is not valid JSON: {exc.msg}", exc.lineno) from exc
    return RunManifest.from_dict(data)

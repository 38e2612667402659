"""Judgment datasets: CSV ingestion, validation and grouping."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime
from fnmatch import fnmatchcase
from pathlib import Path
from typing import Iterable, Optional

from .observations import TaskObservations
from .tasks import TaskId

COLUMNS = ("agent_id", "prompt_style", "content_domain", "task_id", "response", "trial_index")
OPTIONAL_COLUMNS = ("timestamp",)
PROMPT_STYLES = ("direct", "cot")


class DataFormatError(ValueError):
    """A malformed dataset row, located by line number and field."""

    def __init__(self, path, line: int, field: Optional[str], message: str):
        self.path, self.line, self.field = path, line, field
        where = f"{path}:{line}" + (f" [{field}]" if field else "")
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class JudgmentRecord:
    agent_id: str
    prompt_style: str
    content_domain: str
    task_id: TaskId
    response: float
    trial_index: int
    timestamp: Optional[str] = None

    def __post_init__(self):
        if self.prompt_style not in PROMPT_STYLES:
            raise ValueError(f"prompt_style must be one of {PROMPT_STYLES}")
        if not 0.0 <= self.response <= 100.0:
            raise ValueError(f"response {self.response!r} lies outside [0, 100]")
        object.__setattr__(self, "task_id", TaskId(self.task_id))

    @property
    def group(self) -> tuple[str, str, str]:
        return (self.agent_id, self.prompt_style, self.content_domain)

    @property
    def normalized(self) -> float:
        return self.response / 100.0


GroupKey = tuple  # (agent_id, prompt_style, content_domain)


class Dataset:
    """Judgment records, grouped on demand by (agent, prompt style, domain)."""

    def __init__(self, records: Iterable[JudgmentRecord] = ()):
        self.records = list(records)

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return isinstance(other, Dataset) and self.records == other.records

    def __repr__(self):
        return f"Dataset({len(self.records)} records, {len(self.groups())} groups)"

    @property
    def agents(self) -> list[str]:
        return sorted({r.agent_id for r in self.records})

    def group_records(self) -> dict[GroupKey, list[JudgmentRecord]]:
        groups = defaultdict(list)
        for r in self.records:
            groups[r.group].append(r)
        return dict(sorted(groups.items()))

    def groups(self) -> dict[GroupKey, TaskObservations]:
        out = {}
        for key, records in self.group_records().items():
            per_task = defaultdict(list)
            for r in sorted(records, key=lambda r: (r.task_id, r.trial_index)):
                per_task[r.task_id].append(r.normalized)
            out[key] = TaskObservations(dict(per_task))
        return out

    def select(self, agent: str = "*", prompt_style: str = "all") -> "Dataset":
        """Records whose agent matches the glob and whose style matches."""
        return Dataset(
            r for r in self.records
            if fnmatchcase(r.agent_id, agent)
            and (prompt_style == "all" or r.prompt_style == prompt_style)
        )

    def extend(self, other: "Dataset") -> None:
        self.records.extend(other.records)


def _parse_timestamp(text: str) -> str:
    datetime.fromisoformat(text[:-1] + "+00:00" if text.endswith("Z") else text)
    return text


def _parse_row(path, line: int, row: list[str], width: int) -> JudgmentRecord:
    if len(row) != width:
        raise DataFormatError(path, line, None, f"expected {width} fields, got {len(row)}")
    values = dict(zip(COLUMNS + OPTIONAL_COLUMNS, (c.strip() for c in row)))

    def field(name, convert):
        try:
            return convert(values[name])
        except (ValueError, KeyError) as exc:
            raise DataFormatError(path, line, name, f"{values.get(name)!r}: {exc}") from None

    agent = values["agent_id"]
    if not agent:
        raise DataFormatError(path, line, "agent_id", "empty agent id")
    style = values["prompt_style"].lower()
    if style not in PROMPT_STYLES:
        raise DataFormatError(path, line, "prompt_style", f"{style!r} is not one of {PROMPT_STYLES}")
    task = field("task_id", TaskId.parse)
    response = field("response", float)
    if not 0.0 <= response <= 100.0:
        raise DataFormatError(path, line, "response", f"{response!r} lies outside [0, 100]")
    trial = field("trial_index", int)
    if trial < 0:
        raise DataFormatError(path, line, "trial_index", "must be non-negative")
    stamp = None
    if values.get("timestamp"):
        stamp = field("timestamp", _parse_timestamp)
    return JudgmentRecord(agent, style, values["content_domain"], task, response, trial, stamp)


def read_csv(stream, path="<stream>") -> Dataset:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise DataFormatError(path, 1, None, "empty file")
    header = [h.strip() for h in header]
    if tuple(header) not in (COLUMNS, COLUMNS + OPTIONAL_COLUMNS):
        raise DataFormatError(path, 1, None, f"header must be {','.join(COLUMNS)}[,timestamp]")
    records = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        records.append(_parse_row(path, reader.line_num, row, len(header)))
    return Dataset(records)


def load_csv(path) -> Dataset:
    """Read and validate a judgment CSV.

    Every non-blank row becomes a record or raises a ``DataFormatError``
    naming the line and field.  Responses stay on the 0-100 scale; they are
    divided by 100 when grouped into observations.
    """
    with open(path, newline="") as fh:
        return read_csv(fh, path)


def dumps_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    with_stamp = any(r.timestamp for r in dataset.records)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS + (OPTIONAL_COLUMNS if with_stamp else ()))
    for r in dataset.records:
        row = [r.agent_id, r.prompt_style, r.content_domain, str(r.task_id),
               f"{r.response:.10g}", r.trial_index]
        if with_stamp:
            row.append(r.timestamp or "")
        writer.writerow(row)
    return buf.getvalue()


def atomic_write(path, data) -> None:
    """Write to a temporary sibling and rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write {path}: {exc}") from exc


def save_csv(dataset: Dataset, path) -> None:
    atomic_write(path, dumps_csv(dataset))

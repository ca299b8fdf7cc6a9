"""Line-delimited JSON record files (one object per line, sorted keys)."""

import json
from pathlib import Path
from typing import Iterable, Iterator


def dump_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


def append_record(path: str | Path, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as f:
        f.write(dump_line(record) + "\n")


def write_records(path: str | Path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for record in records:
            f.write(dump_line(record) + "\n")


def read_records(path: str | Path) -> Iterator[dict]:
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)

"""JSON-lines metric log.

Each line is one record with exactly the keys ``step``, ``section``, ``name``
and ``value``. Sections are ``reward``, ``loss`` and ``metrics``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

SECTIONS = ("reward", "loss", "metrics")
METRICS_FILE = "metrics.jsonl"


@dataclass(frozen=True)
class MetricRecord:
    step: int
    section: str
    name: str
    value: float

    def __post_init__(self):
        if self.section not in SECTIONS:
            raise ValueError(f"section must be one of {SECTIONS}, got {self.section!r}")
        object.__setattr__(self, "step", int(self.step))
        object.__setattr__(self, "value", float(self.value))


class MetricLogger:
    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")

    def log(self, record: MetricRecord) -> None:
        self._fh.write(json.dumps(asdict(record)) + "\n")

    def log_many(self, records) -> None:
        for record in records:
            self.log(record)
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list[MetricRecord]:
    path = Path(path)
    if path.is_dir():
        path = path / METRICS_FILE
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(MetricRecord(**json.loads(line)))
    return records


def series(records, name: str, section: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(steps, values)`` of one named metric, in file order."""
    picked = [r for r in records if r.name == name and (section is None or r.section == section)]
    steps = np.array([r.step for r in picked], dtype=np.int64)
    values = np.array([r.value for r in picked], dtype=np.float64)
    return steps, values

"""Result persistence: deterministic CSV tables plus a separate run log.

Result CSVs contain only values derived from the configuration and seeds,
so re-running an identical config reproduces them bit for bit.  Wall-clock
timings and other non-deterministic run metadata go to a JSON run log
next to the CSV, never into the table itself.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

CSV_COLUMNS = ["method", "seed", "episode_or_budget", "return", "cumulative_mean"]


@dataclass(frozen=True)
class ResultRow:
    method: str
    seed: int
    episode_or_budget: int
    return_value: float
    cumulative_mean: float


@dataclass
class ResultTable:
    """Append-only record of per-episode (or per-budget) outcomes."""

    rows: list[ResultRow] = field(default_factory=list)

    def append(
        self,
        method: str,
        seed: int,
        episode_or_budget: int,
        return_value: float,
        cumulative_mean: float,
    ) -> None:
        self.rows.append(
            ResultRow(method, seed, episode_or_budget, return_value, cumulative_mean)
        )

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(
                    [
                        row.method,
                        row.seed,
                        row.episode_or_budget,
                        repr(row.return_value),
                        repr(row.cumulative_mean),
                    ]
                )
        return path


def read_result_csv(path: str | Path) -> ResultTable:
    table = ResultTable()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected result CSV header: {header}")
        for row in reader:
            table.append(row[0], int(row[1]), int(row[2]), float(row[3]), float(row[4]))
    return table


class RunLog:
    """Non-deterministic run metadata (timings, errors); JSON sidecar."""

    def __init__(self) -> None:
        self.records: list[dict] = []
        self._started: dict[str, float] = {}

    def start(self, stage: str) -> None:
        self._started[stage] = time.perf_counter()

    def finish(self, stage: str, **extra) -> None:
        elapsed = time.perf_counter() - self._started.pop(stage, time.perf_counter())
        self.records.append({"stage": stage, "wall_time_s": elapsed, **extra})

    def error(self, stage: str, message: str) -> None:
        self.records.append({"stage": stage, "error": message})

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.records, fh, indent=2)
            fh.write("\n")
        return path

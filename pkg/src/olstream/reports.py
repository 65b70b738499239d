"""CSV and JSON report writing shared by the experiments and the command line.

CSV files have a header row; JSON files hold a list of objects with the same
fields.  Floats are written with ``repr`` so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence


def _plain(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool) or value is None:
        return value
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return value


def _cell(value: Any) -> str:
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def rows_to_json(rows: Iterable[dict]) -> str:
    return json.dumps([_plain(dict(r)) for r in rows], indent=2, sort_keys=False) + "\n"


def write_reports(rows: Sequence[dict], csv_path=None, json_path=None, columns=None) -> None:
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            fh.write(rows_to_csv(rows, columns))
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(rows_to_json(rows))


@dataclass
class ExperimentRecord:
    """One experiment outcome: parameter tuple, value, mode, sample count, seed."""

    experiment: str
    params: dict = field(default_factory=dict)
    value: Any = None
    mode: str = ""
    samples: int | None = None
    seed: int | None = None

    COLUMNS = ("experiment", "params", "value", "mode", "samples", "seed")

    def row(self) -> dict:
        params = ";".join(f"{k}={_cell(v)}" for k, v in self.params.items())
        return {
            "experiment": self.experiment,
            "params": params,
            "value": self.value,
            "mode": self.mode,
            "samples": self.samples,
            "seed": self.seed,
        }


def records_to_csv(records: Iterable[ExperimentRecord]) -> str:
    return rows_to_csv([r.row() for r in records], ExperimentRecord.COLUMNS)

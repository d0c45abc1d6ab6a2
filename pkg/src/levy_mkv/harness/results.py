"""Result persistence: provenance-stamped CSV rows and JSON reports.

CSV bytes are deterministic for a fixed config and seed (no wall-clock in
the CSV; timing lives in the JSON report only).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field


@dataclass
class ResultRecord:
    experiment: str
    config_hash: str
    constants_hash: str
    rows: list = field(default_factory=list)  # dicts: t, stat, value, stderr, n
    wall_clock: float = 0.0
    version: str = "0.1.0"
    extra: dict = field(default_factory=dict)

    def add(self, t: float, stat: str, value: float, stderr: float, n: int,
            **labels) -> None:
        row = {"t": float(t), "stat": stat, "value": float(value),
               "stderr": float(stderr), "n": int(n)}
        row.update(labels)
        self.rows.append(row)

    def csv_text(self) -> str:
        label_keys = sorted({k for row in self.rows
                             for k in row if k not in ("t", "stat", "value", "stderr", "n")})
        header = ["t", "stat", "value", "stderr", "n"] + label_keys
        lines = [
            f"# experiment={self.experiment} config={self.config_hash} "
            f"constants={self.constants_hash} version={self.version}",
            ",".join(header),
        ]
        for row in self.rows:
            cells = []
            for key in header:
                val = row.get(key, "")
                cells.append(repr(val) if isinstance(val, float) else str(val))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def json_text(self) -> str:
        payload = {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "constants_hash": self.constants_hash,
            "version": self.version,
            "wall_clock_s": self.wall_clock,
            "rows": self.rows,
        }
        payload.update(self.extra)
        return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"

    def write(self, out_dir: str, formats=("csv", "json")) -> dict:
        os.makedirs(out_dir, exist_ok=True)
        written = {}
        if "csv" in formats:
            path = os.path.join(out_dir, "results.csv")
            with open(path, "w") as fh:
                fh.write(self.csv_text())
            written["csv"] = path
        if "json" in formats:
            path = os.path.join(out_dir, "report.json")
            with open(path, "w") as fh:
                fh.write(self.json_text())
            written["json"] = path
        return written


def constants_hash(report_dict: dict) -> str:
    blob = json.dumps(report_dict, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]

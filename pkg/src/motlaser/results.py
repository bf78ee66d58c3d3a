"""Plot-ready tabular results: CSV plus a structured-text metadata sidecar.

The metadata embeds everything needed to reproduce the table bit-exactly:
the full config snapshot, the calibration constants, the command with its
normalized arguments, the seed and the code version.  Floats are written
in full-precision scientific notation; missing cells become empty fields,
never NaN strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

FLOAT_FORMAT = "{:.17e}"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return FLOAT_FORMAT.format(value)
    return str(value)


@dataclass
class ScanResultTable:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)  # section -> {key: value}

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width does not match the column schema")
        self.rows.append(tuple(values))

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def metadata_text(self) -> str:
        lines = []
        for section, entries in self.metadata.items():
            lines.append(f"[{section}]")
            for key, value in entries.items():
                if isinstance(value, float):
                    value = repr(float(value))  # plain repr even for np scalars
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)

    def write(self, csv_path, metadata_path) -> None:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.csv_text())
        with open(metadata_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.metadata_text())


def parse_metadata(text: str) -> dict:
    """Inverse of metadata_text: section -> {key: raw string value}."""
    out = {}
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            out[section] = {}
            continue
        if section is None or "=" not in line:
            raise ValueError(f"malformed metadata line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[section][key] = value
    return out

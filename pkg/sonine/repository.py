import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

from pydantic import BaseModel

from sonine.errors import ConfigError
from sonine.models import GridFunction

PathLike = Union[str, Path]


def _cell(value: Any) -> str:
    # repr gives the shortest string that round-trips a double
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ReportRepository:
    """Reads and writes run reports, CSV tables and sampled functions."""

    @staticmethod
    def save_report(report: BaseModel, directory: PathLike, name: Optional[str] = None) -> Path:
        """Write a report as indented JSON; the file is named after the report's command."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{name or getattr(report, 'command', 'report')}.json"
        path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        return path

    @staticmethod
    def write_table(rows: Iterable[Sequence[Any]], header: Sequence[str], path: PathLike) -> Path:
        """Write rows as RFC-4180 CSV with full-precision floats."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\r\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(value) for value in row])
        return path

    @staticmethod
    def read_grid_function(path: PathLike, interp_order: int = 1) -> GridFunction:
        """Read an `x,value` CSV (header optional) into a GridFunction."""
        mesh, values = [], []
        with Path(path).open(newline="", encoding="utf-8") as handle:
            for number, row in enumerate(csv.reader(handle), start=1):
                if not row:
                    continue
                try:
                    x, v = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if number == 1:
                        continue
                    raise ConfigError(f"{path}: line {number} is not an 'x,value' pair: {row!r}") from None
                mesh.append(x)
                values.append(v)
        try:
            return GridFunction(mesh=mesh, values=values, interp_order=interp_order)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    @staticmethod
    def write_grid_function(gf: GridFunction, path: PathLike) -> Path:
        return ReportRepository.write_table(gf.to_rows(), ["x", "value"], path)

    @staticmethod
    def load_json_config(path: PathLike) -> Dict[str, Any]:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Could not read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object, got {type(data).__name__}")
        return data

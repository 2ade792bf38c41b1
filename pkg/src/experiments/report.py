# src/experiments/report.py
import csv
import io
import json
import logging
import math
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Dict, List, Optional

import numpy as np
import pydantic
import scipy
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

PACKAGE = "stein_pairs"


def module_versions() -> Dict[str, str]:
    try:
        own = version(PACKAGE)
    except PackageNotFoundError:
        own = "0.1.0"
    return {PACKAGE: own, "numpy": np.__version__, "scipy": scipy.__version__, "pydantic": pydantic.VERSION}


def json_safe(value: Any) -> Any:
    """Plain JSON values: numpy scalars and arrays unwrapped, non-finite floats as null."""
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, np.generic):
        return json_safe(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(key): json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    return value


class ExperimentReport(BaseModel):
    """Everything one run produced; identical bytes for identical (config, seed, threads)."""
    experiment: str
    config: Dict[str, Any] = Field(description="The fully resolved config, defaults included.")
    seed: int
    threads: int
    versions: Dict[str, str] = Field(default_factory=module_versions)
    results: Dict[str, Any] = Field(default_factory=dict)
    predicates: Dict[str, bool] = Field(default_factory=dict, description="Acceptance checks; all must hold to pass.")
    passed: bool = True
    table_header: Optional[List[str]] = None
    table: Optional[List[List[str]]] = None

    @field_validator("config", "results", mode="before")
    @classmethod
    def _plain_values(cls, value):
        return json_safe(value)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls.model_validate_json(text)

    def to_csv(self) -> Optional[str]:
        if self.table_header is None:
            return None
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.table_header)
        writer.writerows(self.table or [])
        return buffer.getvalue()


def write_table(report: ExperimentReport, csv_path: str) -> None:
    table = report.to_csv()
    if table is None:
        logger.warning(f"{report.experiment} has no tabular results; skipping {csv_path}")
        return
    with open(csv_path, "w") as f:
        f.write(table)
    logger.info(f"Wrote table to {csv_path}")


def emit_report(
    report: ExperimentReport,
    path: str,
    csv_path: Optional[str] = None,
    wall_clock: Optional[float] = None,
) -> None:
    """Writes the JSON report, the optional CSV table, and a ``<path>.timing.json`` sidecar."""
    with open(path, "w") as f:
        f.write(report.to_json())
    logger.info(f"Wrote {report.experiment} report to {path}")
    if csv_path is not None:
        write_table(report, csv_path)
    if wall_clock is not None:
        with open(f"{path}.timing.json", "w") as f:
            json.dump({"wall_clock_seconds": wall_clock}, f, indent=2)
            f.write("\n")


def read_report(path: str) -> ExperimentReport:
    with open(path) as f:
        return ExperimentReport.from_json(f.read())

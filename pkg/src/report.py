import csv, logging, math, os
from dataclasses import dataclass, fields

from src.errors import InputError

logger = logging.getLogger(__name__)

STATUS_OK, STATUS_TIMEOUT, STATUS_ERROR = "ok", "timeout", "error"


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    model: str
    epsilon: float
    n: int
    d: int
    metric: str | None
    mean: float | None
    std: float | None
    count: int
    fit_minutes: float | None
    sample_minutes: float | None
    timeout: bool = False
    status: str = STATUS_OK
    error: str = ""

    def __post_init__(self):
        if self.std is not None and self.std < 0:
            raise InputError(f"negative std {self.std} for {self.model}/{self.metric}")
        if self.timeout and (self.mean is not None or self.std is not None):
            raise InputError("timeout rows carry no metric values")


HEADER = [f.name for f in fields(ReportRow)]
TIMING_COLUMNS = ("fit_minutes", "sample_minutes")


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    return str(value)


def emit_csv(rows: list[ReportRow], path: str, timing: bool = True) -> None:
    """Header plus one line per row; minimal quoting, epsilon=inf written as 'inf'.

    `timing=False` leaves the wall-clock columns empty so repeated runs compare byte for byte.
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(HEADER)
        for row in rows:
            writer.writerow([_format(None if not timing and name in TIMING_COLUMNS else getattr(row, name))
                             for name in HEADER])
    logger.info("Wrote %d report row(s) to %s", len(rows), path)


def _optional_float(cell: str) -> float | None:
    return None if cell == "" else float(cell)


def read_csv(path: str) -> list[ReportRow]:
    with open(path, "r", newline="", encoding="utf-8") as file:
        reader = csv.DictReader(file)
        if reader.fieldnames != HEADER:
            raise InputError(f"{path}: unexpected report header {reader.fieldnames}")
        rows = []
        for record in reader:
            rows.append(ReportRow(
                dataset=record["dataset"], model=record["model"], epsilon=float(record["epsilon"]),
                n=int(record["n"]), d=int(record["d"]), metric=record["metric"] or None,
                mean=_optional_float(record["mean"]), std=_optional_float(record["std"]),
                count=int(record["count"]),
                fit_minutes=_optional_float(record["fit_minutes"]),
                sample_minutes=_optional_float(record["sample_minutes"]),
                timeout=record["timeout"] == "true", status=record["status"], error=record["error"]))
    return rows

"""Reading and writing sweep result tables."""

import csv

from .errors import InvalidSpecError
from .experiment import RESULT_COLUMNS, CellSummary

_INT_COLUMNS = {"k", "delta", "samples"}


def fmt(x):
    """Floats at 17 significant digits; everything else via ``str``."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_results_csv(path_or_file, rows):
    """Write summaries with the standard column order."""
    if hasattr(path_or_file, "write"):
        _write(path_or_file, rows)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh, rows)


def _write(fh, rows):
    fh.write(",".join(RESULT_COLUMNS) + "\n")
    for row in rows:
        fh.write(",".join(fmt(getattr(row, c)) for c in RESULT_COLUMNS) + "\n")


def read_results_csv(path):
    """Load a results table written by :func:`write_results_csv`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InvalidSpecError(f"{path}: missing columns {', '.join(sorted(missing))}")
        rows = []
        for i, rec in enumerate(reader, start=2):
            try:
                values = {c: (int(rec[c]) if c in _INT_COLUMNS else
                              rec[c] if c == "kind" else float(rec[c]))
                          for c in RESULT_COLUMNS}
            except ValueError as exc:
                raise InvalidSpecError(f"{path}:{i}: {exc}") from None
            rows.append(CellSummary(**values))
    return rows

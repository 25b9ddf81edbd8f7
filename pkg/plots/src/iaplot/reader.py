"""Reader for the frozen simulator CSV schema.

The file starts with a `#` schema comment, then the header row; every data
row is self-describing.  Any missing column is reported by name so schema
drift fails loudly.
"""

import csv
import math

EXPECTED_COLUMNS = ("experiment", "seed", "K", "U", "nt", "nr", "snr_db", "bits",
                    "iteration", "trials", "metric", "value", "stderr",
                    "fb_bits_per_user")


class SchemaError(ValueError):
    """The CSV does not match the frozen result schema."""


def _convert(name, raw):
    if name in ("experiment", "metric"):
        return raw
    if name in ("seed", "K", "U", "nt", "nr", "iteration", "trials"):
        return int(raw)
    if raw == "":
        return None
    if raw == "inf":
        return math.inf
    return float(raw)


def read_rows(path):
    """Parse a result CSV into a list of dicts with typed values."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{path}: file has no header row")
    missing = [c for c in EXPECTED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    extra = [c for c in header if c not in EXPECTED_COLUMNS]
    if extra:
        raise SchemaError(f"{path}: unexpected column(s) {', '.join(extra)}")
    rows = []
    for line_no, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise SchemaError(f"{path}: row {line_no} has {len(rec)} fields, "
                              f"expected {len(header)}")
        rows.append({name: _convert(name, raw) for name, raw in zip(header, rec)})
    return rows


def group_key(row):
    """Curve identity inside one figure: metric plus its sweep labels."""
    return (row["metric"], row["bits"], row["iteration"])

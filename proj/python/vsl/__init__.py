"""Python access to the vortex-stretching laboratory."""

import csv as _csv
from pathlib import Path as _Path

from ._core import (
    VslError,
    csv_header,
    format_double,
    ladder,
    large_scale,
    policy_resolution,
    read_field,
    scaling_exponent,
    small_scale,
    sweep_point,
    velocity_gradient,
    write_field,
)

CSV_KINDS = ("diagnostics", "gaps", "tracers", "sweep")


def read_csv(path, kind=None):
    """Rows of a CSV output as dicts of floats; checks the header when kind is given."""
    with open(_Path(path), newline="") as f:
        reader = _csv.reader(f)
        header = next(reader)
        if kind is not None and header != csv_header(kind):
            raise ValueError(f"{path} does not match the {kind} schema")
        return [dict(zip(header, map(float, row))) for row in reader]


__all__ = [
    "CSV_KINDS",
    "VslError",
    "csv_header",
    "format_double",
    "ladder",
    "large_scale",
    "policy_resolution",
    "read_csv",
    "read_field",
    "scaling_exponent",
    "small_scale",
    "sweep_point",
    "velocity_gradient",
    "write_field",
]

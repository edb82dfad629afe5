"""Figure tool for discrimloss run telemetry (CSV in, images out)."""

from .figures import (
    DataRangeError,
    FigureSpec,
    KINDS,
    SchemaError,
    read_metrics,
    read_samples,
    render,
)

__all__ = [
    "DataRangeError",
    "FigureSpec",
    "KINDS",
    "SchemaError",
    "read_metrics",
    "read_samples",
    "render",
]

__version__ = "0.1.0"

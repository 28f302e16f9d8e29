"""Figure rendering for hybrid-belief experiment CSVs.

Consumes the trace and runtime-sweep CSVs produced by the simulation CLI
and renders the standard plots; no in-process coupling to the inference
package, the CSV files are the whole interface.
"""

from .figures import (
    KINDS,
    EmptyInput,
    FigureError,
    FigureSpec,
    InconsistentTrace,
    MissingColumn,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "EmptyInput",
    "FigureError",
    "FigureSpec",
    "InconsistentTrace",
    "MissingColumn",
    "render",
]

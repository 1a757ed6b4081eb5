"""Run artifacts: delimited traces, the run report, and figures."""

from .traces import TraceRecorder, percentile
from .summary import build_report, write_report

__all__ = ["TraceRecorder", "percentile", "build_report", "write_report"]

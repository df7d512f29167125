"""Report memory for the benchmark harness."""

from .store import ReportStore, get_report_store

__all__ = ["ReportStore", "get_report_store"]

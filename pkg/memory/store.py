"""In-process store of solve reports, keyed by matrix name."""

from datetime import datetime
from typing import Any, Optional

from krylov.report import SolveReport


class ReportStore:
    """In-memory store for the reports produced by experiment runs."""

    def __init__(self):
        self.runs: dict[str, list[dict]] = {}
        self.entries: list[dict] = []

    def save_report(self, matrix: str, report: SolveReport) -> dict:
        """Save one report under a matrix name."""
        entry = {
            "matrix": matrix,
            "label": report.label,
            "report": report,
            "saved_at": datetime.now().isoformat(),
        }
        self.runs.setdefault(matrix, []).append(entry)
        self.entries.append(entry)
        return {"status": "success", "matrix": matrix, "report_id": len(self.entries) - 1}

    def get_reports(self, matrix: str, label: Optional[str] = None) -> list[SolveReport]:
        """Reports for a matrix, optionally only those of one method label."""
        return [
            entry["report"]
            for entry in self.runs.get(matrix, [])
            if label is None or entry["label"] == label
        ]

    def get_summary(self) -> str:
        """One-line summary of what has been stored."""
        if not self.entries:
            return "No stored runs."

        parts = [f"Matrices: {len(self.runs)}", f"Reports: {len(self.entries)}"]
        statuses: dict[str, int] = {}
        for entry in self.entries:
            status = entry["report"].status
            statuses[status] = statuses.get(status, 0) + 1
        parts.append(", ".join(f"{name}: {count}" for name, count in sorted(statuses.items())))
        last = self.entries[-1]
        parts.append(f"Last run: {last['label']} on {last['matrix']}")
        return " | ".join(parts)

    def export(self, matrix: str) -> list[dict[str, Any]]:
        """Plain-data summaries of every report for a matrix."""
        return [entry["report"].summary() for entry in self.runs.get(matrix, [])]

    def clear(self) -> None:
        """Clear all stored data."""
        self.runs.clear()
        self.entries.clear()


# Global report store instance
_report_store: Optional[ReportStore] = None


def get_report_store() -> ReportStore:
    """Get the global report store instance."""
    global _report_store
    if _report_store is None:
        _report_store = ReportStore()
    return _report_store

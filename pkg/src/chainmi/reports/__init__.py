"""Report output for chainmi."""

from chainmi.reports.writer import ReportWriter

__all__ = ["ReportWriter"]

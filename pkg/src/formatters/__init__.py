"""Formatters for output data."""

from src.formatters.report_formatter import ReportFormatter

__all__ = ["ReportFormatter"]

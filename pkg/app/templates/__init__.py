"""
Report templates module
Contains plain-text templates for CLI reports
"""

from .template_loader import TemplateLoader
from .template_types import ReportTemplateType

__all__ = ["TemplateLoader", "ReportTemplateType"]

"""
Report template types enum
Defines all available text reports
"""

from enum import Enum


class ReportTemplateType(str, Enum):
    """Enumeration of available report templates"""

    PARAMS = "PARAMS"
    BENCH = "BENCH"
    SESSION = "SESSION"

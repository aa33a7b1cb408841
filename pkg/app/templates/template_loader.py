"""
Report template loader
Renders plain-text reports for the CLI with Jinja2
"""

from pathlib import Path
from typing import Any, Dict

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound

from app.templates.template_types import ReportTemplateType

# Get the templates directory path
TEMPLATES_DIR = Path(__file__).parent / "text"

# Initialize Jinja2 environment (plain text, so no HTML escaping)
env = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    autoescape=False,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    undefined=StrictUndefined,
)


class TemplateLoader:
    """Loads and renders report templates"""

    @staticmethod
    def render_template(template_type: ReportTemplateType, context: Dict[str, Any]) -> str:
        """
        Render a report with the given context

        Args:
            template_type: The report to render
            context: Variables used by the template

        Returns:
            str: rendered report
        """
        try:
            template = env.get_template(f"{template_type.value.lower()}.txt.j2")
            return template.render(**context)
        except TemplateNotFound:
            raise ValueError(f"Template '{template_type.value}' not found")
        except Exception as e:
            raise ValueError(f"Error rendering template: {str(e)}")

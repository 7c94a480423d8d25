"""HTML rendering utilities."""

import json
import os
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, select_autoescape

template_dir = os.path.join(os.path.dirname(__file__), "../html/")
jinja_env = Environment(loader=FileSystemLoader(template_dir), autoescape=select_autoescape(["j2"]))


def html(template: str, *args, **kwargs) -> str:
    """Renders the HTML template with the current log level."""
    template_obj = jinja_env.get_template(template)
    kwargs["loglevel"] = os.getenv("REIDADAPT_LOGLEVEL", "INFO")
    return template_obj.render(*args, **kwargs)


def write_html(path, template: str, *args, **kwargs) -> Path:
    """Renders a template into a file next to the run artifacts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(html(template, *args, **kwargs))
    return path


def print_json(obj: dict) -> None:
    """Prints a JSON object in a pretty format."""
    print(json.dumps(obj, indent=4, default=str))

import os

from jinja2 import Environment, FileSystemLoader, select_autoescape

# 模板目录 (src/cli/templates)
TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")

env = Environment(
    loader=FileSystemLoader(TEMPLATE_DIR),
    autoescape=select_autoescape([]),
    trim_blocks=True,
    lstrip_blocks=True,
)


class ReportLoader:
    @staticmethod
    def render(template_name: str, **kwargs) -> str:
        """渲染指定模板"""
        template = env.get_template(template_name)
        return template.render(**kwargs)

# src/Core/Templates/Reports/reports.py
# Rendering interface for the .j2 report templates next to this file.

from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from src.Core.Models.reports import AblationReport, GradCheckResult, MetricReport

TEMPLATE_DIR = Path(__file__).parent

environment = Environment(
    loader=FileSystemLoader(TEMPLATE_DIR),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    undefined=StrictUndefined,
)


def render_eval_report(report: MetricReport, joint_names: list[str], *, checkpoint: str, seeds: str) -> str:
    template = environment.get_template("eval_report.j2")
    rows = list(zip(joint_names, report.joint_hits, report.joint_totals, report.per_joint_pck))
    return template.render(report=report, rows=rows, checkpoint=checkpoint, seeds=seeds)


def render_gradcheck_report(selector: str, results: list[GradCheckResult], tolerance: float) -> str:
    template = environment.get_template("gradcheck_report.j2")
    return template.render(
        selector=selector,
        results=results,
        tolerance=tolerance,
        passed=all(r.passed for r in results),
        width=max((len(r.name) for r in results), default=4),
    )


def render_ablation_report(report: AblationReport) -> str:
    template = environment.get_template("ablation_report.j2")
    return template.render(report=report)

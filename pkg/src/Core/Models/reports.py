# src/Core/Models/reports.py
# Result models handed between the pipeline, the evaluator and the CLI reports.

from __future__ import annotations

from typing import Annotated, Any, List

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator


class LossReport(BaseModel):
    """Loss terms of one forward pass: total = l_inst + alpha * l_joint."""

    l_inst: Annotated[float, Field(ge=0, description="Focal loss between predicted and GT center maps.")]
    l_joint: Annotated[float, Field(ge=0, description="Mean squared error between joint heatmaps.")]
    total: Annotated[float, Field(ge=0, description="Weighted total loss.")]
    alpha: Annotated[float, Field(gt=0, description="Weight of the joint term.")]

    _total_tensor: Any = PrivateAttr(default=None)

    @property
    def total_tensor(self) -> Any:
        """The differentiable total, when the report came from a training pass."""
        return self._total_tensor

    @model_validator(mode="after")
    def _total_matches(self) -> "LossReport":
        if abs(self.total - (self.l_inst + self.alpha * self.l_joint)) > 1e-6 * max(1.0, abs(self.total)):
            raise ValueError("total must equal l_inst + alpha * l_joint")
        return self


class MetricReport(BaseModel):
    """PCK over matched instances."""

    pck: Annotated[float, Field(ge=0, le=1, description="Fraction of GT joints hit.")]
    joint_hits: Annotated[List[int], Field(description="Hits per joint index.")]
    joint_totals: Annotated[List[int], Field(description="GT joints per joint index.")]
    radius_frac: Annotated[float, Field(gt=0, description="Hit radius as a fraction of person scale.")]
    scenes: Annotated[int, Field(ge=0, description="Scenes aggregated into this report.")] = 1

    @property
    def hits(self) -> int:
        return sum(self.joint_hits)

    @property
    def total(self) -> int:
        return sum(self.joint_totals)

    @property
    def per_joint_pck(self) -> list[float]:
        return [h / t if t else 0.0 for h, t in zip(self.joint_hits, self.joint_totals)]

    @classmethod
    def merge(cls, reports: list["MetricReport"]) -> "MetricReport":
        if not reports:
            raise ValueError("cannot merge an empty list of reports")
        k = len(reports[0].joint_hits)
        hits = [sum(r.joint_hits[j] for r in reports) for j in range(k)]
        totals = [sum(r.joint_totals[j] for r in reports) for j in range(k)]
        total = sum(totals)
        return cls(
            pck=sum(hits) / total if total else 0.0,
            joint_hits=hits,
            joint_totals=totals,
            radius_frac=reports[0].radius_frac,
            scenes=sum(r.scenes for r in reports),
        )


class GradCheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    shape: List[int]
    max_rel_error: float
    passed: bool


class AblationRow(BaseModel):
    variant: Annotated[str, Field(description="Branch preset name.")]
    seeds: Annotated[List[int], Field(description="Training seeds that were run.")]
    pcks: Annotated[List[float], Field(description="Held-out PCK per seed.")]

    @property
    def mean(self) -> float:
        return sum(self.pcks) / len(self.pcks) if self.pcks else 0.0

    @property
    def std(self) -> float:
        if len(self.pcks) < 2:
            return 0.0
        m = self.mean
        return (sum((p - m) ** 2 for p in self.pcks) / (len(self.pcks) - 1)) ** 0.5


class AblationReport(BaseModel):
    """Mean held-out PCK per variant plus the directional comparison against ``full``."""

    rows: Annotated[List[AblationRow], Field(description="One row per variant, in run order.")]
    margin: Annotated[float, Field(ge=0, description="Slack allowed below the full model.")] = 0.01

    def row(self, variant: str) -> AblationRow | None:
        return next((r for r in self.rows if r.variant == variant), None)

    @property
    def full_is_competitive(self) -> bool | None:
        full = self.row("full")
        if full is None:
            return None
        return all(full.mean >= r.mean - self.margin for r in self.rows if r.variant != "full")

    @property
    def baseline_is_best(self) -> bool | None:
        base = self.row("baseline")
        if base is None or len(self.rows) < 2:
            return None
        return all(base.mean > r.mean for r in self.rows if r.variant != "baseline")

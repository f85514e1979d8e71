# src/Core/Models/configs.py
# Typed configuration. Every model forbids unknown fields; RunConfig is what a
# config file parses into and what a checkpoint echoes back.

from __future__ import annotations

from typing import Annotated, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.Core.Models.errors import ConfigurationError
from src.Core.Tools.Tensor.optim import AdamHyper

ENCODER_STRIDE = 4

RelationModule = Literal["cim", "cjm"]

# (enable_ijr, enable_jir, ijr_modules, jir_modules) of each DIM design; a
# disabled branch's module list is irrelevant and stored as None here.
_DIM_ROWS: dict[str, tuple[bool, bool, tuple[str, ...] | None, tuple[str, ...] | None]] = {
    "baseline": (False, False, None, None),
    "ijr_only": (True, False, ("cim", "cjm"), None),
    "jir_only": (False, True, None, ("cjm", "cim")),
    "cim_cim": (True, True, ("cim",), ("cim",)),
    "cjm_cjm": (True, True, ("cjm",), ("cjm",)),
    "full": (True, True, ("cim", "cjm"), ("cjm", "cim")),
}

# name -> (DIM row, use_adfm_in_dim, use_adfm_in_decoder)
VARIANTS: dict[str, tuple[str, bool, bool]] = {
    "baseline": ("baseline", True, True),
    "ijr_only": ("ijr_only", True, True),
    "jir_only": ("jir_only", True, True),
    "cim_cim": ("cim_cim", True, True),
    "cjm_cjm": ("cjm_cjm", True, True),
    "full": ("full", True, True),
    "no_adfm": ("full", False, False),
    "adfm_dim_only": ("full", True, False),
    "adfm_decoder_only": ("full", False, True),
}


class BranchConfig(BaseModel):
    """Which relation branches run, in what module order, and where ADFM gates are used."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enable_ijr: Annotated[bool, Field(description="Run the instance->joint branch.")] = True
    enable_jir: Annotated[bool, Field(description="Run the joint->instance branch.")] = True
    ijr_modules: Annotated[Tuple[RelationModule, ...], Field(description="Ordered IJR stages.")] = ("cim", "cjm")
    jir_modules: Annotated[Tuple[RelationModule, ...], Field(description="Ordered JIR stages.")] = ("cjm", "cim")
    use_adfm_in_dim: Annotated[bool, Field(description="Channel-gated fusion inside the branches.")] = True
    use_adfm_in_decoder: Annotated[bool, Field(description="CBAM gates in the pose decoder.")] = True

    @field_validator("ijr_modules", "jir_modules", mode="before")
    @classmethod
    def _split_text(cls, value):
        if isinstance(value, str):
            return tuple(part.strip().lower() for part in value.split(",") if part.strip())
        return value

    @model_validator(mode="after")
    def _known_design(self) -> "BranchConfig":
        self.dim_row()
        return self

    def dim_row(self) -> str:
        """Name of the DIM design this configuration corresponds to."""
        for name, (ijr, jir, ijr_mods, jir_mods) in _DIM_ROWS.items():
            if (self.enable_ijr, self.enable_jir) != (ijr, jir):
                continue
            if ijr and self.ijr_modules != ijr_mods:
                continue
            if jir and self.jir_modules != jir_mods:
                continue
            return name
        raise ConfigurationError(
            f"unsupported branch combination ijr={self.enable_ijr}:{','.join(self.ijr_modules)} "
            f"jir={self.enable_jir}:{','.join(self.jir_modules)}",
            key="branch",
        )

    @classmethod
    def from_variant(cls, name: str) -> "BranchConfig":
        if name not in VARIANTS:
            raise ConfigurationError(f"unknown branch variant '{name}'; expected one of {sorted(VARIANTS)}", key="branch")
        row, adfm_dim, adfm_dec = VARIANTS[name]
        ijr, jir, ijr_mods, jir_mods = _DIM_ROWS[row]
        return cls(
            enable_ijr=ijr,
            enable_jir=jir,
            ijr_modules=ijr_mods or ("cim", "cjm"),
            jir_modules=jir_mods or ("cjm", "cim"),
            use_adfm_in_dim=adfm_dim,
            use_adfm_in_decoder=adfm_dec,
        )


class ModelDims(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    c: Annotated[int, Field(ge=1, description="Visual feature channels.")] = 16
    d: Annotated[int, Field(ge=2, description="Instance feature channels (even).")] = 8
    k: Annotated[int, Field(ge=1, description="Joints per person.")] = 5
    height: Annotated[int, Field(ge=4, description="Input image height.")] = 64
    width: Annotated[int, Field(ge=4, description="Input image width.")] = 64
    head_channels: Annotated[int, Field(ge=1, description="Hidden width of conv heads.")] = 16

    @model_validator(mode="after")
    def _check(self) -> "ModelDims":
        if self.d % 2:
            raise ValueError("d must be even for the sinusoidal positional embedding")
        if self.height % ENCODER_STRIDE or self.width % ENCODER_STRIDE:
            raise ValueError(f"height and width must be divisible by {ENCODER_STRIDE}")
        return self

    @property
    def feature_size(self) -> tuple[int, int]:
        return self.height // ENCODER_STRIDE, self.width // ENCODER_STRIDE


class LossConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: Annotated[float, Field(gt=0, description="Weight of the joint heatmap term.")] = 1.0
    sigma_target: Annotated[float, Field(gt=0, description="Target Gaussian sigma, feature pixels.")] = 1.5
    sigma_mask: Annotated[float, Field(gt=0, description="Instance mask Gaussian sigma, feature pixels.")] = 2.0


class SeedRange(BaseModel):
    """Half-open range of scene seeds, written ``start:stop``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    start: Annotated[int, Field(ge=0)]
    stop: Annotated[int, Field(ge=1)]

    @model_validator(mode="before")
    @classmethod
    def _parse(cls, value):
        if isinstance(value, str):
            head, sep, tail = value.partition(":")
            if not sep:
                raise ValueError("seed range must look like start:stop")
            return {"start": head.strip(), "stop": tail.strip()}
        return value

    @model_validator(mode="after")
    def _ordered(self) -> "SeedRange":
        if self.stop <= self.start:
            raise ValueError("seed range stop must exceed start")
        return self

    def seeds(self) -> range:
        return range(self.start, self.stop)

    def __str__(self) -> str:
        return f"{self.start}:{self.stop}"


class ScheduleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    steps: Annotated[int, Field(ge=0, description="Adam steps (one scene per step).")] = 5000
    lr_drops: Annotated[Tuple[float, ...], Field(description="Fractions of steps where lr is divided by ten.")] = (
        1 / 3,
        2 / 3,
    )
    log_every: Annotated[int, Field(ge=1, description="Structured log cadence in steps.")] = 50

    @field_validator("lr_drops", mode="before")
    @classmethod
    def _split_text(cls, value):
        if isinstance(value, str):
            return tuple(float(part) for part in value.split(",") if part.strip())
        return value

    @field_validator("lr_drops")
    @classmethod
    def _fractions(cls, value):
        if any(not 0 < v < 1 for v in value):
            raise ValueError("lr drop points must be fractions in (0, 1)")
        if list(value) != sorted(value):
            raise ValueError("lr drop points must be increasing")
        return value

    def lr_at(self, step: int, base_lr: float) -> float:
        drops = sum(1 for frac in self.lr_drops if step >= int(round(frac * self.steps)))
        return base_lr * (0.1**drops)


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_max: Annotated[int, Field(ge=1, le=6, description="Maximum persons per scene.")] = 4
    overlap_prob: Annotated[float, Field(ge=0, le=1, description="Chance of forcing an overlapping pair.")] = 0.5
    train_seeds: SeedRange = SeedRange(start=0, stop=2000)
    eval_seeds: SeedRange = SeedRange(start=100000, stop=100200)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    pck_radius: Annotated[float, Field(gt=0, description="PCK radius as fraction of person scale.")] = 0.1
    peak_threshold: Annotated[float, Field(gt=0, lt=1, description="Minimum center score for a proposal.")] = 0.1
    max_proposals: Annotated[int, Field(ge=1, description="Cap on detected instances.")] = 6
    eval_with_gt_centers: Annotated[bool, Field(description="Use ground-truth centers at evaluation.")] = False
    eval_workers: Annotated[int, Field(ge=1, description="Threads used to evaluate scenes.")] = 1


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelDims = ModelDims()
    branch: BranchConfig = BranchConfig()
    loss: LossConfig = LossConfig()
    optimizer: AdamHyper = AdamHyper()
    schedule: ScheduleConfig = ScheduleConfig()
    data: DataConfig = DataConfig()
    eval: EvalConfig = EvalConfig()
    seed: Annotated[int, Field(ge=0, description="Global seed for init and scene order.")] = 0

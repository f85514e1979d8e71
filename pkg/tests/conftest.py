import numpy as np
import pytest
from hypothesis import settings

from src.Core.Models.configs import DataConfig, EvalConfig, ModelDims, RunConfig, ScheduleConfig, SeedRange
from Utils.Logger.logfire import configure_logfire

configure_logfire(send=False, console=False)

# numpy convolutions are slow enough that the default per-example deadline flakes
settings.register_profile("sandbox", deadline=None, max_examples=25)
settings.load_profile("sandbox")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_dims() -> ModelDims:
    return ModelDims(c=4, d=4, k=2, height=32, width=32, head_channels=4)


@pytest.fixture
def tiny_config(tiny_dims: ModelDims) -> RunConfig:
    """A model and schedule small enough to train a few steps inside a test."""
    return RunConfig(
        model=tiny_dims,
        schedule=ScheduleConfig(steps=3, log_every=1),
        data=DataConfig(
            n_max=1,
            overlap_prob=0.0,
            train_seeds=SeedRange(start=0, stop=10),
            eval_seeds=SeedRange(start=500, stop=503),
        ),
        eval=EvalConfig(eval_with_gt_centers=True),
    )

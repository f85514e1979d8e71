# src/CLI/Commands/ablate.py
# Train + evaluate every branch variant over several seeds and compare with `full`.

from __future__ import annotations

from typing import Sequence

from tqdm import tqdm

from src.CLI.Commands.evaluate import evaluate_params
from src.CLI.Commands.train import train_params
from src.Core.Models.configs import VARIANTS, BranchConfig, RunConfig
from src.Core.Models.errors import ConfigurationError
from src.Core.Models.reports import AblationReport, AblationRow
from src.Core.Templates.Reports.reports import render_ablation_report
from Utils.Logger.logfire import logfire

DIM_VARIANTS = ("baseline", "ijr_only", "jir_only", "cim_cim", "cjm_cjm", "full")
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


def run_ablation(config: RunConfig, variants: Sequence[str], seeds: Sequence[int]) -> AblationReport:
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ConfigurationError(f"unknown variant(s) {unknown}; expected some of {sorted(VARIANTS)}", key="variants")
    rows = []
    with logfire.span("ablate", variants=list(variants), seeds=list(seeds)):
        for variant in tqdm(variants, desc="variants"):
            pcks = []
            for seed in seeds:
                run = config.model_copy(update={"branch": BranchConfig.from_variant(variant), "seed": seed})
                params = train_params(run, progress=False)
                pck = evaluate_params(params, run, progress=False).pck
                logfire.info("{variant} seed {seed}: pck {pck:.4f}", variant=variant, seed=seed, pck=pck)
                pcks.append(pck)
            rows.append(AblationRow(variant=variant, seeds=list(seeds), pcks=pcks))
    return AblationReport(rows=rows)


def cmd_ablate(
    config: RunConfig, variants: Sequence[str] = DIM_VARIANTS, seeds: Sequence[int] = DEFAULT_SEEDS
) -> AblationReport:
    report = run_ablation(config, variants, seeds)
    print(render_ablation_report(report))
    return report

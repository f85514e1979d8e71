# src/Core/Tools/Relnet/params.py
# Parameter containers for the relation modules. Each exposes named_tensors()
# so ModelParams can register, checkpoint and optimise them by name.

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from src.Core.Tools.Tensor import init
from src.Core.Tools.Tensor.tensor import Tensor

GATE_REDUCTION = 4
SPATIAL_KERNEL = 7


class _Named:
    def named_tensors(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{f.name}": getattr(self, f.name) for f in fields(self)}  # type: ignore[arg-type]


def _hidden(width: int) -> int:
    return max(width // GATE_REDUCTION, 1)


@dataclass
class CjmParams(_Named):
    """Conv_Q, Conv_K, Conv_V: 1x1, K -> K."""

    q_weight: Tensor
    q_bias: Tensor
    k_weight: Tensor
    k_bias: Tensor
    v_weight: Tensor
    v_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, k: int, name: str = "cjm") -> CjmParams:
        qw, qb = init.conv_params(rng, k, k, 1, f"{name}.q")
        kw, kb = init.conv_params(rng, k, k, 1, f"{name}.k")
        vw, vb = init.conv_params(rng, k, k, 1, f"{name}.v")
        return cls(qw, qb, kw, kb, vw, vb)

    @property
    def k(self) -> int:
        return self.q_weight.shape[0]


@dataclass
class AdfmParams(_Named):
    """Squeeze-excite gate (two linear layers, reduction 4) and the 1x1 fuse conv."""

    fc1_weight: Tensor
    fc1_bias: Tensor
    fc2_weight: Tensor
    fc2_bias: Tensor
    fuse_weight: Tensor
    fuse_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, c_in: int, c_out: int, name: str = "adfm") -> AdfmParams:
        w1, b1 = init.linear_params(rng, c_in, _hidden(c_in), f"{name}.fc1")
        w2, b2 = init.linear_params(rng, _hidden(c_in), c_in, f"{name}.fc2")
        fw, fb = init.conv_params(rng, c_out, c_in, 1, f"{name}.fuse")
        return cls(w1, b1, w2, b2, fw, fb)

    @property
    def c_in(self) -> int:
        return self.fuse_weight.shape[1]

    @property
    def c_out(self) -> int:
        return self.fuse_weight.shape[0]


@dataclass
class DecoderParams(_Named):
    """CBAM channel MLP, CBAM 7x7 spatial conv, then the 3x3 and 1x1 head convs."""

    ca_fc1_weight: Tensor
    ca_fc1_bias: Tensor
    ca_fc2_weight: Tensor
    ca_fc2_bias: Tensor
    sa_weight: Tensor
    sa_bias: Tensor
    head1_weight: Tensor
    head1_bias: Tensor
    head2_weight: Tensor
    head2_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, c_in: int, hidden: int, k: int, name: str = "decoder") -> DecoderParams:
        w1, b1 = init.linear_params(rng, c_in, _hidden(c_in), f"{name}.ca_fc1")
        w2, b2 = init.linear_params(rng, _hidden(c_in), c_in, f"{name}.ca_fc2")
        sw, sb = init.conv_params(rng, 1, 2, SPATIAL_KERNEL, f"{name}.sa")
        h1w, h1b = init.conv_params(rng, hidden, c_in, 3, f"{name}.head1")
        h2w, h2b = init.conv_params(rng, k, hidden, 1, f"{name}.head2")
        return cls(w1, b1, w2, b2, sw, sb, h1w, h1b, h2w, h2b)

    @property
    def c_in(self) -> int:
        return self.head1_weight.shape[1]


@dataclass
class BranchParams:
    """One relational branch: its CJM convs and its fusion module."""

    cjm: CjmParams
    adfm: AdfmParams

    def named_tensors(self, prefix: str) -> dict[str, Tensor]:
        return {**self.cjm.named_tensors(f"{prefix}.cjm"), **self.adfm.named_tensors(f"{prefix}.adfm")}


@dataclass
class DimParams:
    """Both branches. IJR fuses to K channels for its CJM, JIR fuses to d for its CIM."""

    ijr: BranchParams
    jir: BranchParams

    @classmethod
    def init(cls, rng: np.random.Generator, d: int, k: int) -> DimParams:
        ijr = BranchParams(CjmParams.init(rng, k, "ijr.cjm"), AdfmParams.init(rng, d + k, k, "ijr.adfm"))
        jir = BranchParams(CjmParams.init(rng, k, "jir.cjm"), AdfmParams.init(rng, k + d, d, "jir.adfm"))
        return cls(ijr, jir)

    def named_tensors(self, prefix: str) -> dict[str, Tensor]:
        return {**self.ijr.named_tensors(f"{prefix}.ijr"), **self.jir.named_tensors(f"{prefix}.jir")}

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from app.domain.ssm.core import ssm_forward
from app.domain.ssm.entity import ContinuousSsm
from app.shared.utils.validators import ensure_last_dim


def silu(v: torch.Tensor) -> torch.Tensor:
    """v * sigmoid(v)"""
    return F.silu(v)


def causal_conv1d(
    u: torch.Tensor, kernel: torch.Tensor, bias: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """
    Depthwise causal convolution over time.

    Args:
        u: [..., T, D]
        kernel: [D, K]; tap K-1 multiplies the current frame, tap 0 the
            frame K-1 steps back
        bias: [D] or None

    Returns:
        [..., T, D]; frame t depends on u at frames <= t only
    """
    ensure_last_dim(u, kernel.shape[0], "conv input")
    lead, (length, channels) = u.shape[:-2], u.shape[-2:]
    x = u.reshape(-1, length, channels).transpose(1, 2)
    x = F.pad(x, (kernel.shape[1] - 1, 0))
    y = F.conv1d(x, kernel.unsqueeze(1), bias, groups=channels)
    return y.transpose(1, 2).reshape(*lead, length, channels)


class SsmBranch(nn.Module):
    """Causal conv -> SiLU -> selective SSM over d_inner channels"""

    def __init__(self, d_inner: int, n_state: int = 16, k_conv: int = 3):
        super().__init__()
        bound = 1.0 / math.sqrt(k_conv)
        self.conv_kernel = nn.Parameter(
            torch.empty(d_inner, k_conv).uniform_(-bound, bound)
        )
        self.conv_bias = nn.Parameter(torch.empty(d_inner).uniform_(-bound, bound))
        self.ssm = ContinuousSsm(d_inner, n_state)

    def forward(self, u: torch.Tensor, parallel: bool = True) -> torch.Tensor:
        return self.run(u, parallel)[0]

    def run(
        self, u: torch.Tensor, parallel: bool = True
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        conv_out = silu(causal_conv1d(u, self.conv_kernel, self.conv_bias))
        return ssm_forward(conv_out, self.ssm, parallel=parallel), conv_out


@dataclass(frozen=True)
class BlockActivationCache:
    normed: torch.Tensor
    conv_out: torch.Tensor
    ssm_out: torch.Tensor
    gate: torch.Tensor


class MambaBlock(nn.Module):
    """
    Pre-norm Mamba block:
        (u, g) = split(in_proj(norm(x)))
        y = x + out_proj(branch(u) * silu(g))
    The residual is dropped when ``residual=False``.
    """

    def __init__(
        self,
        d_model: int,
        d_inner: int,
        n_state: int = 16,
        k_conv: int = 3,
        residual: bool = True,
        parallel_scan: bool = True,
    ):
        super().__init__()
        self.d_model = d_model
        self.d_inner = d_inner
        self.residual = residual
        self.parallel_scan = parallel_scan
        self.norm = nn.LayerNorm(d_model)
        self.in_proj = nn.Linear(d_model, 2 * d_inner, bias=False)
        self.branch = SsmBranch(d_inner, n_state, k_conv)
        self.out_proj = nn.Linear(d_inner, d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.run(x, keep_cache=False)[0]

    def run(
        self, x: torch.Tensor, keep_cache: bool
    ) -> Tuple[torch.Tensor, Optional[BlockActivationCache]]:
        ensure_last_dim(x, self.d_model, "block input")
        normed = self.norm(x)
        u, g = self.in_proj(normed).chunk(2, dim=-1)
        ssm_out, conv_out = self.branch.run(u, self.parallel_scan)
        gate = silu(g)
        y = self.out_proj(ssm_out * gate)
        if self.residual:
            y = x + y
        cache = None
        if keep_cache:
            cache = BlockActivationCache(
                normed=normed, conv_out=conv_out, ssm_out=ssm_out, gate=gate
            )
        return y, cache


def mamba_block_forward(
    x: torch.Tensor, block: MambaBlock, training: bool = False
) -> Tuple[torch.Tensor, Optional[BlockActivationCache]]:
    """Run one block; the activation cache is returned only in training mode"""
    block.train(training)
    return block.run(x, keep_cache=training)

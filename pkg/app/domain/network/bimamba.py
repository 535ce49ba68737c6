import copy
from typing import Sequence

import torch
from torch import nn

from app.domain.network.entity import BiMambaVariant, ModelConfig
from app.domain.network.mamba_block import MambaBlock, SsmBranch, silu
from app.shared.errors import InvalidArgumentError, ShapeMismatchError
from app.shared.utils.validators import ensure_last_dim


def reverse_time(x: torch.Tensor) -> torch.Tensor:
    """Reverse frame order of [..., T, D]"""
    return x.flip(-2)


class InnBiMamba(nn.Module):
    """
    Two conv+SSM branches sharing one pre-norm, in_proj and out_proj. The
    backward branch sees the time-reversed projection and its output is
    reversed back before the two are added.
    """

    def __init__(
        self,
        d_model: int,
        d_inner: int,
        n_state: int = 16,
        k_conv: int = 3,
        parallel_scan: bool = True,
    ):
        super().__init__()
        self.d_model = d_model
        self.parallel_scan = parallel_scan
        self.norm = nn.LayerNorm(d_model)
        self.in_proj = nn.Linear(d_model, 2 * d_inner, bias=False)
        self.forward_branch = SsmBranch(d_inner, n_state, k_conv)
        self.backward_branch = SsmBranch(d_inner, n_state, k_conv)
        self.out_proj = nn.Linear(d_inner, d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        ensure_last_dim(x, self.d_model, "InnBiMamba input")
        u, g = self.in_proj(self.norm(x)).chunk(2, dim=-1)
        fwd = self.forward_branch(u, self.parallel_scan)
        bwd = reverse_time(self.backward_branch(reverse_time(u), self.parallel_scan))
        return x + self.out_proj((fwd + bwd) * silu(g))

    def swapped(self) -> "InnBiMamba":
        other = copy.deepcopy(self)
        other.forward_branch, other.backward_branch = (
            other.backward_branch,
            other.forward_branch,
        )
        return other


class ExtBiMamba(nn.Module):
    """
    Two complete residual-free Mamba blocks, one on x and one on reverse(x),
    fused by addition with a single residual around the pair.
    """

    def __init__(
        self,
        d_model: int,
        d_inner: int,
        n_state: int = 16,
        k_conv: int = 3,
        parallel_scan: bool = True,
    ):
        super().__init__()
        self.d_model = d_model
        self.forward_block = MambaBlock(
            d_model, d_inner, n_state, k_conv, residual=False, parallel_scan=parallel_scan
        )
        self.backward_block = MambaBlock(
            d_model, d_inner, n_state, k_conv, residual=False, parallel_scan=parallel_scan
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        ensure_last_dim(x, self.d_model, "ExtBiMamba input")
        return (
            x
            + self.forward_block(x)
            + reverse_time(self.backward_block(reverse_time(x)))
        )

    def swapped(self) -> "ExtBiMamba":
        other = copy.deepcopy(self)
        other.forward_block, other.backward_block = (
            other.backward_block,
            other.forward_block,
        )
        return other


class MambaColumn(nn.Module):
    """A stack of residual Mamba blocks, optionally followed by a LayerNorm"""

    def __init__(
        self,
        d_model: int,
        d_inner: int,
        n_blocks: int,
        n_state: int = 16,
        k_conv: int = 3,
        final_norm: bool = False,
        parallel_scan: bool = True,
    ):
        super().__init__()
        if n_blocks < 1:
            raise InvalidArgumentError("a column needs at least one block")
        self.blocks = nn.ModuleList(
            MambaBlock(d_model, d_inner, n_state, k_conv, parallel_scan=parallel_scan)
            for _ in range(n_blocks)
        )
        self.final_norm = nn.LayerNorm(d_model) if final_norm else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            x = block(x)
        return self.final_norm(x)


class DuaBiMamba(nn.Module):
    """
    Two independent columns: one over x, one over reverse(x) with its output
    reversed back. Output is concat(forward, backward) on the feature axis,
    forward features first.
    """

    def __init__(self, forward_column: MambaColumn, backward_column: MambaColumn):
        super().__init__()
        if len(forward_column.blocks) != len(backward_column.blocks):
            raise ShapeMismatchError(
                f"column depth mismatch: {len(forward_column.blocks)} vs "
                f"{len(backward_column.blocks)}"
            )
        self.forward_column = forward_column
        self.backward_column = backward_column

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        f = self.forward_column(x)
        b = reverse_time(self.backward_column(reverse_time(x)))
        return torch.cat([f, b], dim=-1)

    def swapped(self) -> "DuaBiMamba":
        other = copy.deepcopy(self)
        other.forward_column, other.backward_column = (
            other.backward_column,
            other.forward_column,
        )
        return other


def dua_bimamba_forward(x: torch.Tensor, columns: DuaBiMamba) -> torch.Tensor:
    ensure_last_dim(x, columns.forward_column.blocks[0].d_model, "DuaBiMamba input")
    return columns(x)


def inn_bimamba_forward(x: torch.Tensor, layer: InnBiMamba) -> torch.Tensor:
    return layer(x)


def ext_bimamba_forward(x: torch.Tensor, layer: ExtBiMamba) -> torch.Tensor:
    return layer(x)


def stack_forward(
    x: torch.Tensor, blocks: Sequence[nn.Module], variant: BiMambaVariant
) -> torch.Tensor:
    """Apply the blocks of a trunk in order; for dua the stack is one column pair"""
    if len(blocks) == 0:
        raise InvalidArgumentError("empty stack")
    if variant == BiMambaVariant.DUA and (
        len(blocks) != 1 or not isinstance(blocks[0], DuaBiMamba)
    ):
        raise InvalidArgumentError("a dua stack is exactly one DuaBiMamba column pair")
    for block in blocks:
        x = block(x)
    return x


class BiMambaTrunk(nn.Module):
    """The N-block trunk for one variant; output width d_model, or 2*d_model for dua"""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.variant = BiMambaVariant(config.variant)
        self.d_model = config.d_model
        dims = (config.d_model, config.d_inner)
        options = dict(
            n_state=config.n_state,
            k_conv=config.k_conv,
            parallel_scan=config.parallel_scan,
        )

        if self.variant == BiMambaVariant.UNIDIRECTIONAL:
            layers = [
                MambaBlock(*dims, **options) for _ in range(config.n_blocks)
            ]
        elif self.variant == BiMambaVariant.INN:
            layers = [InnBiMamba(*dims, **options) for _ in range(config.n_blocks)]
        elif self.variant == BiMambaVariant.EXT:
            layers = [ExtBiMamba(*dims, **options) for _ in range(config.n_blocks)]
        else:
            columns = [
                MambaColumn(
                    *dims,
                    n_blocks=config.n_blocks,
                    final_norm=config.column_norm,
                    **options,
                )
                for _ in range(2)
            ]
            layers = [DuaBiMamba(*columns)]
        self.layers = nn.ModuleList(layers)

    @property
    def output_width(self) -> int:
        if self.variant == BiMambaVariant.DUA:
            return 2 * self.d_model
        return self.d_model

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        ensure_last_dim(x, self.d_model, "trunk input")
        return stack_forward(x, self.layers, self.variant)

    def swapped(self) -> "BiMambaTrunk":
        """Exchange every forward and backward pathway"""
        if self.variant == BiMambaVariant.UNIDIRECTIONAL:
            raise InvalidArgumentError("a unidirectional trunk has no backward pathway")
        other = copy.deepcopy(self)
        other.layers = nn.ModuleList(layer.swapped() for layer in self.layers)
        return other


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


def scan_branch_count(config: ModelConfig) -> int:
    """Selective scans one trunk forward runs over the sequence"""
    if BiMambaVariant(config.variant) == BiMambaVariant.UNIDIRECTIONAL:
        return config.n_blocks
    return 2 * config.n_blocks

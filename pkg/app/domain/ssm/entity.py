import math
from dataclasses import dataclass

import torch
from torch import nn


class ContinuousSsm(nn.Module):
    """
    Continuous-time selective SSM parameters over ``d_inner`` channels.

    The state matrix is diagonal and stored as ``a_log = log(-A)`` so that
    ``a_diag = -exp(a_log)`` is strictly negative. ``b_proj``/``c_proj`` map a
    frame to its input/output vectors B_t, C_t (bias-free), ``delta_proj``
    maps it to the pre-activation step size, and ``d_skip`` is the direct
    feed-through term.
    """

    def __init__(
        self,
        d_inner: int,
        n_state: int = 16,
        dt_min: float = 1e-3,
        dt_max: float = 1e-1,
        dt_init_floor: float = 1e-4,
    ):
        super().__init__()
        self.d_inner = d_inner
        self.n_state = n_state

        # -A spans [1, n_state] log-uniformly
        a = torch.logspace(0.0, math.log10(n_state), n_state)
        self.a_log = nn.Parameter(torch.log(a).repeat(d_inner, 1))
        self.b_proj = nn.Linear(d_inner, n_state, bias=False)
        self.c_proj = nn.Linear(d_inner, n_state, bias=False)
        self.delta_proj = nn.Linear(d_inner, d_inner, bias=True)
        self.d_skip = nn.Parameter(torch.ones(d_inner))

        bound = 1.0 / math.sqrt(d_inner)
        with torch.no_grad():
            for layer in (self.b_proj, self.c_proj, self.delta_proj):
                nn.init.uniform_(layer.weight, -bound, bound)
            dt = torch.exp(
                torch.rand(d_inner) * (math.log(dt_max) - math.log(dt_min))
                + math.log(dt_min)
            ).clamp(min=dt_init_floor)
            # inverse softplus
            self.delta_proj.bias.copy_(dt + torch.log(-torch.expm1(-dt)))

    @property
    def a_diag(self) -> torch.Tensor:
        return -torch.exp(self.a_log)


@dataclass(frozen=True)
class DiscreteSteps:
    """
    A sequence of discretized steps.

    a_bar, b_bar_x: [..., L, D, N]
    c: [..., L, N] (shared by all channels) or [..., L, D, N]
    """

    a_bar: torch.Tensor
    b_bar_x: torch.Tensor
    c: torch.Tensor

    @property
    def length(self) -> int:
        return self.a_bar.shape[-3]

    @property
    def n_state(self) -> int:
        return self.a_bar.shape[-1]

    def c_full(self) -> torch.Tensor:
        if self.c.dim() == self.a_bar.dim() - 1:
            return self.c.unsqueeze(-2)
        return self.c


@dataclass(frozen=True)
class ScanState:
    """Hidden state h: [..., D, N]"""

    h: torch.Tensor

    @classmethod
    def zeros_like_steps(cls, steps: DiscreteSteps) -> "ScanState":
        shape = steps.a_bar.shape[:-3] + steps.a_bar.shape[-2:]
        return cls(
            torch.zeros(shape, dtype=steps.a_bar.dtype, device=steps.a_bar.device)
        )


@dataclass(frozen=True)
class ScanCache:
    """Forward intermediates needed by the adjoint scan"""

    a_bar: torch.Tensor
    c: torch.Tensor
    states: torch.Tensor
    h0: torch.Tensor


@dataclass(frozen=True)
class ScanGradients:
    a_bar: torch.Tensor
    b_bar_x: torch.Tensor
    c: torch.Tensor
    h0: torch.Tensor


@dataclass(frozen=True)
class SelectiveParams:
    """Per-step input-dependent parameters: b, c [..., L, N]; delta [..., L, D]"""

    b: torch.Tensor
    c: torch.Tensor
    delta: torch.Tensor

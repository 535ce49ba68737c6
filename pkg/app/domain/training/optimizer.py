from typing import Iterable

import torch

from app.shared.monitoring.logging import get_logger

logger = get_logger(__name__)

BETAS = (0.9, 0.999)
EPS = 1e-8


def build_optimizer(
    parameters: Iterable[torch.nn.Parameter], lr: float, weight_decay: float
) -> torch.optim.AdamW:
    """Adam moments with decoupled weight decay"""
    return torch.optim.AdamW(
        parameters, lr=lr, betas=BETAS, eps=EPS, weight_decay=weight_decay
    )


def grads_are_finite(optimizer: torch.optim.Optimizer) -> bool:
    for group in optimizer.param_groups:
        for p in group["params"]:
            if p.grad is not None and not bool(torch.isfinite(p.grad).all()):
                return False
    return True


def adam_step(optimizer: torch.optim.Optimizer) -> bool:
    """
    Apply one update from the gradients currently stored on the parameters.

    Returns False (and leaves parameters and moments untouched) when any
    gradient is non-finite.
    """
    if not grads_are_finite(optimizer):
        logger.warning("Skipping optimizer step: non-finite gradients")
        optimizer.zero_grad(set_to_none=True)
        return False
    optimizer.step()
    return True

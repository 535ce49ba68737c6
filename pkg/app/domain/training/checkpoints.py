import copy
from typing import Dict, List, Sequence

import torch

from app.domain.training.entity import RankedCheckpoint
from app.shared.errors import EmptyInputError, ShapeMismatchError
from app.shared.monitoring.logging import get_logger
from app.shared.utils.validators import ensure_same_shape

logger = get_logger(__name__)


def _rank(checkpoints: Sequence[RankedCheckpoint]) -> List[RankedCheckpoint]:
    # lower dev EER first, earlier epoch breaks ties
    return sorted(checkpoints, key=lambda c: (c.dev_eer, c.epoch))


def average_checkpoints(
    checkpoints: Sequence[RankedCheckpoint], k: int
) -> Dict[str, torch.Tensor]:
    """
    Elementwise mean of the k checkpoints with the lowest dev EER.

    The mean is accumulated incrementally (m += (x - m) / i) so that
    identical checkpoints average to themselves bit for bit.
    """
    if not checkpoints:
        raise EmptyInputError("no checkpoints to average")
    if len(checkpoints) < k:
        logger.warning(
            f"Only {len(checkpoints)} checkpoints available for top-{k} averaging; averaging all"
        )
    chosen = _rank(checkpoints)[:k]
    names = set(chosen[0].state)
    for checkpoint in chosen[1:]:
        if set(checkpoint.state) != names:
            raise ShapeMismatchError(
                f"checkpoint from epoch {checkpoint.epoch} has different tensors"
            )
    for name in names:
        ensure_same_shape([c.state[name].shape for c in chosen], name)

    averaged = {name: t.detach().clone() for name, t in chosen[0].state.items()}
    for i, checkpoint in enumerate(chosen[1:], start=2):
        for name, tensor in checkpoint.state.items():
            if averaged[name].is_floating_point():
                averaged[name] += (tensor - averaged[name]) / i
    return averaged


class CheckpointPool:
    """Keeps the top_k checkpoints by dev EER"""

    def __init__(self, top_k: int):
        self.top_k = top_k
        self.items: List[RankedCheckpoint] = []

    def offer(
        self, epoch: int, dev_eer: float, state: Dict[str, torch.Tensor]
    ) -> bool:
        candidate = RankedCheckpoint(
            epoch=epoch, dev_eer=dev_eer, state=copy.deepcopy(state)
        )
        self.items = _rank(self.items + [candidate])[: self.top_k]
        return any(item is candidate for item in self.items)

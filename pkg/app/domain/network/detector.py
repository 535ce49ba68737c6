from typing import Sequence

import numpy as np
import torch
from torch import nn

from app.domain.network.bimamba import BiMambaTrunk
from app.domain.network.entity import ModelConfig, Pooling
from app.shared.errors import DataError
from app.shared.utils.validators import ensure_last_dim

BONAFIDE_INDEX = 0
SPOOF_INDEX = 1


def project_features(x: torch.Tensor, projection: nn.Linear) -> torch.Tensor:
    """Per-frame affine map [..., T, d_feat] -> [..., T, d_model]"""
    ensure_last_dim(x, projection.in_features, "features")
    return projection(x)


class AttentivePooling(nn.Module):
    def __init__(self, width: int):
        super().__init__()
        self.attention = nn.Linear(width, 1)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        weights = torch.softmax(self.attention(h), dim=-2)
        return (weights * h).sum(-2)


def mean_pool(h: torch.Tensor) -> torch.Tensor:
    return h.mean(dim=-2)


def max_pool(h: torch.Tensor) -> torch.Tensor:
    return h.amax(dim=-2)


class XlsrMambaDetector(nn.Module):
    """
    Features [..., T, d_feat] -> linear projection -> BiMamba trunk ->
    pooling over time -> linear head -> (bonafide, spoof) logits.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.projection = nn.Linear(config.d_feat, config.d_model)
        self.trunk = BiMambaTrunk(config)
        width = self.trunk.output_width
        self.attentive_pool = (
            AttentivePooling(width) if config.pooling == Pooling.ATTENTIVE else None
        )
        self.head = nn.Linear(width, 2)

    def pool(self, h: torch.Tensor) -> torch.Tensor:
        if self.config.pooling == Pooling.MAX:
            return max_pool(h)
        if self.attentive_pool is not None:
            return self.attentive_pool(h)
        return mean_pool(h)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2] == 0:
            raise DataError("empty sequence")
        h = self.trunk(project_features(x, self.projection))
        return self.head(self.pool(h))


def predict(x: torch.Tensor, model: XlsrMambaDetector) -> torch.Tensor:
    """Logits (bonafide, spoof) for one utterance or a batch"""
    return model(x)


def detection_score(logits: torch.Tensor) -> torch.Tensor:
    """bonafide logit minus spoof logit; higher means more bonafide"""
    return logits[..., BONAFIDE_INDEX] - logits[..., SPOOF_INDEX]


def build_detector(
    config: ModelConfig, dtype: torch.dtype = torch.float32
) -> XlsrMambaDetector:
    """Seeded construction so a config always yields the same initial weights"""
    torch.manual_seed(config.seed)
    return XlsrMambaDetector(config).to(dtype)


def _forward_group(
    model: XlsrMambaDetector, features: Sequence[torch.Tensor]
) -> torch.Tensor:
    # equal-length utterances run as one batch, ragged ones one at a time
    if len({f.shape[0] for f in features}) == 1:
        return model(torch.stack(list(features)))
    return torch.stack([model(f) for f in features])


def batch_logits(
    model: XlsrMambaDetector, features: Sequence[torch.Tensor]
) -> torch.Tensor:
    """Logits [B, 2] for a list of [T_i, d_feat] feature matrices"""
    return _forward_group(model, features)


def score_features(
    model: XlsrMambaDetector, features: Sequence[torch.Tensor], batch_size: int = 20
) -> np.ndarray:
    """Detection scores in input order, evaluated without gradients"""
    was_training = model.training
    model.eval()
    scores = []
    with torch.no_grad():
        for start in range(0, len(features), batch_size):
            chunk = features[start : start + batch_size]
            scores.append(detection_score(batch_logits(model, chunk)).double())
    model.train(was_training)
    if not scores:
        return np.zeros(0)
    return torch.cat(scores).cpu().numpy()

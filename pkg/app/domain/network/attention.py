import math

import torch
from torch import nn

from app.shared.utils.validators import ensure_last_dim


class SelfAttentionReference(nn.Module):
    """
    Single-head scaled dot-product self-attention, O(T^2 D). Only used as a
    timing baseline for the scan trunk.
    """

    def __init__(self, d_model: int):
        super().__init__()
        self.d_model = d_model
        self.query = nn.Linear(d_model, d_model, bias=False)
        self.key = nn.Linear(d_model, d_model, bias=False)
        self.value = nn.Linear(d_model, d_model, bias=False)

    def attention_weights(self, x: torch.Tensor) -> torch.Tensor:
        scores = self.query(x) @ self.key(x).transpose(-1, -2)
        return torch.softmax(scores / math.sqrt(self.d_model), dim=-1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        ensure_last_dim(x, self.d_model, "attention input")
        return self.attention_weights(x) @ self.value(x)


def attention_reference_forward(
    x: torch.Tensor, layer: SelfAttentionReference
) -> torch.Tensor:
    return layer(x)


class AttentionReferenceSystem(nn.Module):
    """Projection, a residual stack of attention layers, mean pooling and head"""

    def __init__(self, d_feat: int, d_model: int, n_layers: int):
        super().__init__()
        self.projection = nn.Linear(d_feat, d_model)
        self.layers = nn.ModuleList(
            SelfAttentionReference(d_model) for _ in range(n_layers)
        )
        self.head = nn.Linear(d_model, 2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.projection(x)
        for layer in self.layers:
            h = h + layer(h)
        return self.head(h.mean(dim=-2))

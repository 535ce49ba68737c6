import torch
import torch.nn.functional as F


def weighted_ce_loss(
    logits: torch.Tensor, labels: torch.Tensor, weights: torch.Tensor
) -> torch.Tensor:
    """
    mean over the batch of -w[label] * log softmax(logits)[label].

    Args:
        logits: [B, 2] (bonafide, spoof)
        labels: [B] class indices
        weights: [2] positive class weights
    """
    log_probs = F.log_softmax(logits, dim=-1)
    picked = log_probs.gather(-1, labels.long().unsqueeze(-1)).squeeze(-1)
    return (-weights.to(logits.dtype)[labels.long()] * picked).mean()


def inverse_frequency_weights(labels: torch.Tensor, n_classes: int = 2) -> torch.Tensor:
    """w_c = n / (n_classes * n_c); a class that never occurs gets weight 1"""
    counts = torch.bincount(labels.long(), minlength=n_classes).to(torch.float64)
    weights = torch.where(
        counts > 0, labels.numel() / (n_classes * counts.clamp(min=1)), torch.ones_like(counts)
    )
    return weights.float()

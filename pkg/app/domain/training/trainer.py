import math
import time
from typing import Callable, Optional

import numpy as np
import torch

from app.domain.network.detector import (
    XlsrMambaDetector,
    batch_logits,
    build_detector,
    score_features,
)
from app.domain.network.entity import ModelConfig, TrainConfig
from app.domain.scoring.metrics import eer_from_scores
from app.domain.training.checkpoints import CheckpointPool, average_checkpoints
from app.domain.training.entity import (
    EpochRecord,
    FeatureSource,
    KeptCheckpoint,
    TrainingResult,
)
from app.domain.training.objective import inverse_frequency_weights, weighted_ce_loss
from app.domain.training.optimizer import adam_step, build_optimizer
from app.shared.errors import DivergenceError, EmptyInputError
from app.shared.monitoring.logging import get_logger, log_training_event
from app.shared.monitoring.metrics import record_epoch, record_training_step

logger = get_logger(__name__)


def dev_eer(model: XlsrMambaDetector, source: FeatureSource, batch_size: int) -> float:
    data = source.epoch(0)
    scores = score_features(model, data.features, batch_size)
    labels = data.labels.numpy()
    return eer_from_scores(scores[labels == 0], scores[labels == 1]).eer


def train(
    train_source: FeatureSource,
    dev_source: FeatureSource,
    model_config: ModelConfig,
    train_config: TrainConfig,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
    dtype: torch.dtype = torch.float32,
) -> TrainingResult:
    """
    Mini-batch training with dev-EER early stopping and top-k averaging.

    Each epoch shuffles with a generator seeded from the model seed, takes
    one AdamW step per batch, then scores the dev set. Training stops once
    the dev EER has not improved for ``patience`` epochs; the returned
    state is the mean of the top_k checkpoints by dev EER.

    Raises:
        DivergenceError: the loss became non-finite
    """
    model = build_detector(model_config, dtype)
    variant = model_config.variant.value
    if model_config.class_weights is not None:
        weights = torch.tensor(model_config.class_weights)
    else:
        weights = inverse_frequency_weights(train_source.labels)
    logger.info(f"Class weights (bonafide, spoof): {weights.tolist()}")

    optimizer = build_optimizer(
        model.parameters(), train_config.lr, train_config.weight_decay
    )
    generator = torch.Generator().manual_seed(model_config.seed)
    pool = CheckpointPool(train_config.top_k)
    history = []
    best, stale, skipped = math.inf, 0, 0
    stopped_early = False

    for epoch in range(1, train_config.max_epochs + 1):
        model.train()
        data = train_source.epoch(epoch)
        if len(data) == 0:
            raise EmptyInputError("empty training set")
        order = torch.randperm(len(data), generator=generator)
        total_loss = 0.0

        for step, start in enumerate(range(0, len(data), train_config.batch_size)):
            batch = order[start : start + train_config.batch_size]
            step_start = time.perf_counter()
            optimizer.zero_grad(set_to_none=True)
            logits = batch_logits(model, [data.features[i].to(dtype) for i in batch])
            loss = weighted_ce_loss(logits, data.labels[batch], weights)
            if not bool(torch.isfinite(loss)):
                logger.error(
                    "Training diverged",
                    extra=log_training_event("diverged", epoch, step=step),
                )
                raise DivergenceError(
                    f"non-finite loss {loss.item()} at epoch {epoch}, step {step}"
                )
            loss.backward()
            applied = adam_step(optimizer)
            skipped += 0 if applied else 1
            record_training_step(
                "applied" if applied else "skipped",
                variant,
                time.perf_counter() - step_start,
            )
            total_loss += loss.item() * len(batch)

        eer = dev_eer(model, dev_source, train_config.batch_size)
        record = EpochRecord(epoch=epoch, loss=total_loss / len(data), dev_eer=eer)
        history.append(record)
        record_epoch(variant, eer)
        if on_epoch is not None:
            on_epoch(record)

        pool.offer(epoch, eer, model.state_dict())
        if eer < best:
            best, stale = eer, 0
        else:
            stale += 1
        if stale >= train_config.patience:
            logger.info(
                f"Early stop after epoch {epoch}: no dev improvement for {stale} epochs"
            )
            stopped_early = True
            break

    model.load_state_dict(average_checkpoints(pool.items, train_config.top_k))
    averaged = dev_eer(model, dev_source, train_config.batch_size)
    logger.info(f"Averaged top-{len(pool.items)} checkpoint dev_eer={averaged:.6f}")

    return TrainingResult(
        state={k: v.detach().clone() for k, v in model.state_dict().items()},
        history=history,
        kept=[KeptCheckpoint(epoch=c.epoch, dev_eer=c.dev_eer) for c in pool.items],
        averaged_dev_eer=averaged,
        stopped_early=stopped_early,
        skipped_steps=skipped,
    )


def median_kept_eer(result: TrainingResult) -> float:
    return float(np.median([c.dev_eer for c in result.kept]))

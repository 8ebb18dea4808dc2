"""Cross-entropy training loop for the toy zoo."""

import logging
import math
from dataclasses import dataclass

import numpy as np
import torch

from ..exceptions import TrainingDiverged
from ..seeding import rng

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    step_size: float = 0.05
    seed: int = 0
    optimizer: str = "sgd"
    momentum: float = 0.9

    def validate(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")


def _make_optimizer(module, config):
    if config.optimizer == "adam":
        return torch.optim.Adam(module.parameters(), lr=config.step_size)
    return torch.optim.SGD(module.parameters(), lr=config.step_size,
                           momentum=config.momentum)


def train(adapter, train_dataset, config, progress=False):
    """Train the adapter in place; returns (adapter, history).

    History holds one row per epoch with the mean loss and the running
    train-batch accuracy (no test data involved). Deterministic for a fixed
    seed on one platform.
    """
    config.validate()
    if train_dataset.num_classes != adapter.num_classes:
        raise ValueError(
            f"dataset has {train_dataset.num_classes} classes but "
            f"{adapter.model_id} expects {adapter.num_classes}")

    images = torch.from_numpy(train_dataset.images())
    labels = torch.from_numpy(train_dataset.labels())
    n = len(train_dataset)
    optimizer = _make_optimizer(adapter.module, config)
    loss_fn = torch.nn.CrossEntropyLoss()

    epochs = range(config.epochs)
    if progress:
        from tqdm import tqdm
        epochs = tqdm(epochs, desc=f"train {adapter.model_id}", unit="epoch")

    adapter.module.train()
    history = []
    try:
        for epoch in epochs:
            order = rng(config.seed, "shuffle", adapter.model_id, epoch).permutation(n)
            total_loss, correct = 0.0, 0
            for start in range(0, n, config.batch_size):
                idx = torch.from_numpy(order[start:start + config.batch_size].copy())
                xb, yb = images[idx], labels[idx]
                logits = adapter.forward_tensor(xb)
                loss = loss_fn(logits, yb)
                if not math.isfinite(loss.item()):
                    raise TrainingDiverged(
                        f"non-finite loss while training {adapter.model_id} "
                        f"at epoch {epoch}")
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total_loss += loss.item() * len(idx)
                correct += int((logits.argmax(dim=1) == yb).sum())
            row = {"epoch": epoch, "loss": total_loss / n,
                   "train_accuracy": correct / n}
            history.append(row)
            log.debug("%s epoch %d: loss=%.4f acc=%.4f", adapter.model_id,
                      epoch, row["loss"], row["train_accuracy"])
    finally:
        adapter.module.eval()

    adapter.history_ = history
    adapter.dataset_tag = train_dataset.tag
    return adapter, history


def test_accuracy(adapter, dataset):
    """Plain accuracy of the adapter on a dataset (no gradients)."""
    preds = adapter.predict(dataset.images())
    return float(np.mean(preds == dataset.labels()))

"""From-scratch training of a derived network."""

from __future__ import annotations

import csv
import os

import numpy as np

from ..autodiff import Adam, Tape, Tensor, backward, cosine_lr, ops, save_checkpoint
from ..errors import ConfigurationError, NumericsError
from .network import DerivedNetwork, NetworkConfig

TRAIN_HISTORY_HEADER = "epoch,train_loss,train_acc,lr"


def train_from_scratch(network: DerivedNetwork, train_data, cfg: NetworkConfig,
                       out_dir=None, checkpoint_every=None, progress=None):
    """Adam + cosine-annealed training; returns the per-epoch history.

    ``train_data`` is ``(features, labels)`` with features (N, 1, H, W)
    and integer labels in [0, num_classes). When ``out_dir`` is given, a
    rolling ``model.ckpt`` and ``train_log.csv`` are maintained; a
    non-finite loss aborts with the last checkpoint preserved.
    """
    features, labels = train_data
    n = len(labels)
    if n == 0:
        raise ConfigurationError("training set is empty")
    if len(features) != n:
        raise ConfigurationError(
            f"{len(features)} feature rows vs {n} labels"
        )
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= cfg.num_classes:
        raise ConfigurationError(
            f"labels must lie in [0, {cfg.num_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    if checkpoint_every is None:
        checkpoint_every = max(1, cfg.epochs // 5)
    opt = Adam(network.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    history = []
    ckpt_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        ckpt_path = os.path.join(out_dir, "model.ckpt")
    last_ckpt = None
    network.train()
    for epoch in range(cfg.epochs):
        opt.lr = cosine_lr(cfg.lr, epoch, cfg.epochs)
        rng = np.random.default_rng([cfg.seed, 104729, epoch])
        order = rng.permutation(n)
        nb = max(1, n // cfg.batch_size)
        losses, correct, seen = [], 0, 0
        for b in range(nb):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            if len(idx) == 0:
                continue
            x = Tensor(features[idx])
            y = labels[idx]
            with Tape() as tape:
                logits = network(x)
                loss = ops.cross_entropy(logits, y)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericsError(
                    f"non-finite training loss at epoch {epoch}",
                    checkpoint_path=last_ckpt,
                )
            grads = backward(tape, loss)
            opt.step([grads.get(p) for p in opt.params])
            losses.append(value)
            correct += int((logits.data.argmax(axis=1) == y).sum())
            seen += len(idx)
        row = {
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "train_acc": correct / seen,
            "lr": opt.lr,
        }
        history.append(row)
        if progress is not None:
            progress(row)
        if out_dir is not None:
            write_train_history_csv(
                os.path.join(out_dir, "train_log.csv"), history
            )
            if (epoch + 1) % checkpoint_every == 0 or epoch + 1 == cfg.epochs:
                save_checkpoint(ckpt_path, network.state_arrays())
                last_ckpt = ckpt_path
    if out_dir is not None and last_ckpt is None:
        save_checkpoint(ckpt_path, network.state_arrays())
    return history


def write_train_history_csv(path, history):
    cols = TRAIN_HISTORY_HEADER.split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in history:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                             for c in cols])

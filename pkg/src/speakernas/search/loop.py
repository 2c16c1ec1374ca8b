"""Alternating bilevel search over weights and architecture logits.

Each step takes exactly one Adam step on the weights using a training
batch (architecture logits frozen), then exactly one Adam step on the
logits using a validation batch (weights frozen). Every half-step is
audited: which split fed it, and digests of both parameter groups
before and after, so the alternation discipline can be checked after
the fact from the log alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Adam, Tape, Tensor, backward, cosine_lr, ops, save_checkpoint
from ..errors import ConfigurationError, NumericsError
from ..space import ArchParams, arch_entropy
from .config import SupernetConfig
from .supernet import Supernet, build_supernet

HISTORY_HEADER = (
    "epoch,train_loss,val_loss,entropy_normal,entropy_reduction,"
    "entropy_total,lr_omega,lr_alpha"
)


def digest_arrays(arrays) -> str:
    """Order-sensitive content hash of a list of numpy arrays."""
    h = hashlib.blake2b(digest_size=16)
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


@dataclass
class SearchState:
    supernet: Supernet
    arch: ArchParams
    opt_omega: Adam
    opt_alpha: Adam
    epoch: int = 0
    step: int = 0
    entropy_history: list = field(default_factory=list)
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    audit: list = field(default_factory=list)

    @property
    def omega_params(self):
        return self.opt_omega.params


def init_search(cfg: SupernetConfig, rng=None) -> SearchState:
    supernet, arch = build_supernet(cfg, rng=rng)
    opt_omega = Adam(supernet.parameters(), lr=cfg.lr_omega,
                     betas=(0.9, 0.999), weight_decay=cfg.weight_decay)
    opt_alpha = Adam(arch.tensors(), lr=cfg.lr_alpha,
                     betas=(0.5, 0.999), weight_decay=cfg.weight_decay)
    state = SearchState(supernet, arch, opt_omega, opt_alpha)
    state.entropy_history.append(arch_entropy(arch)[2])
    return state


def _loss_on(state: SearchState, batch):
    x, y = batch
    xt = x if isinstance(x, Tensor) else Tensor(x)
    with Tape() as tape:
        logits = state.supernet(xt)
        loss = ops.cross_entropy(logits, y)
    value = float(loss.data)
    if not np.isfinite(value):
        raise NumericsError(f"non-finite loss {value} at step {state.step}")
    return tape, loss, value


def _half_step(state, batch, role, phase, optimizer, frozen_digest_params):
    """One optimizer update; returns (loss, audit record)."""
    alpha_arrays = [t.data for t in state.arch.tensors()]
    omega_arrays = [p.data for p in state.omega_params]
    before = {
        "alpha": digest_arrays(alpha_arrays),
        "omega": digest_arrays(omega_arrays),
    }
    tape, loss, value = _loss_on(state, batch)
    grads = backward(tape, loss)
    optimizer.step([grads.get(p) for p in optimizer.params])
    record = {
        "step": state.step,
        "phase": phase,
        "batch_role": role,
        "batch_digest": digest_arrays([np.asarray(batch[0]), np.asarray(batch[1])]),
        "loss": value,
        "alpha_before": before["alpha"],
        "alpha_after": digest_arrays([t.data for t in state.arch.tensors()]),
        "omega_before": before["omega"],
        "omega_after": digest_arrays([p.data for p in state.omega_params]),
    }
    state.audit.append(record)
    return value


def search_step(state: SearchState, train_batch, val_batch):
    """One alternation: weights on the train batch, logits on the val batch."""
    train_loss = _half_step(state, train_batch, "train", "omega",
                            state.opt_omega, state.arch.tensors())
    val_loss = _half_step(state, val_batch, "val", "alpha",
                          state.opt_alpha, state.omega_params)
    state.step += 1
    state.train_losses.append(train_loss)
    state.val_losses.append(val_loss)
    return train_loss, val_loss


def _epoch_batches(features, labels, batch_size, rng):
    n = len(labels)
    order = rng.permutation(n)
    nb = max(1, n // batch_size)
    for b in range(nb):
        idx = order[b * batch_size:(b + 1) * batch_size]
        if len(idx) == 0:
            continue
        yield features[idx], labels[idx]


def run_search(cfg: SupernetConfig, train_data, val_data, out_dir=None,
               progress=None):
    """Search until the epoch limit or until entropy stops decreasing.

    ``train_data`` / ``val_data`` are ``(features, labels)`` pairs with
    features shaped (N, 1, H, W). Returns ``(state, history)`` where
    history is the list of per-epoch CSV rows (also written to
    ``search_history.csv`` when ``out_dir`` is given, next to
    ``alpha.ckpt`` and ``audit.jsonl``).

    Each epoch's batch order comes from ``default_rng([seed, 7919,
    epoch])``, train permutation drawn before val, so an outside reader
    can regenerate every batch digest in the audit log from the inputs
    alone.
    """
    for name, (x, y) in (("train", train_data), ("val", val_data)):
        if len(y) == 0:
            raise ConfigurationError(f"{name} split is empty")
        if len(x) != len(y):
            raise ConfigurationError(
                f"{name} split: {len(x)} feature rows vs {len(y)} labels"
            )
    state = init_search(cfg)
    train_x, train_y = train_data
    val_x, val_y = val_data
    history = []
    best_entropy = state.entropy_history[0]
    stall = 0
    for epoch in range(cfg.epochs):
        state.epoch = epoch
        state.opt_omega.lr = cosine_lr(cfg.lr_omega, epoch, cfg.epochs)
        state.opt_alpha.lr = cosine_lr(cfg.lr_alpha, epoch, cfg.epochs)
        rng = np.random.default_rng([cfg.seed, 7919, epoch])
        tb = list(_epoch_batches(train_x, train_y, cfg.batch_size, rng))
        vb = list(_epoch_batches(val_x, val_y, cfg.batch_size, rng))
        epoch_train, epoch_val = [], []
        for train_batch, val_batch in zip(tb, vb):
            tl, vl = search_step(state, train_batch, val_batch)
            epoch_train.append(tl)
            epoch_val.append(vl)
        h_n, h_r, h_total = arch_entropy(state.arch)
        state.entropy_history.append(h_total)
        row = {
            "epoch": epoch,
            "train_loss": float(np.mean(epoch_train)),
            "val_loss": float(np.mean(epoch_val)),
            "entropy_normal": h_n,
            "entropy_reduction": h_r,
            "entropy_total": h_total,
            "lr_omega": state.opt_omega.lr,
            "lr_alpha": state.opt_alpha.lr,
        }
        history.append(row)
        if progress is not None:
            progress(row)
        if out_dir is not None:
            _write_outputs(out_dir, state, history)
        if h_total < best_entropy:
            best_entropy = h_total
            stall = 0
        else:
            stall += 1
            if stall >= cfg.entropy_patience:
                break
    if out_dir is not None:
        _write_outputs(out_dir, state, history)
    return state, history


def _write_outputs(out_dir, state: SearchState, history):
    os.makedirs(out_dir, exist_ok=True)
    save_checkpoint(os.path.join(out_dir, "alpha.ckpt"), state.arch.as_arrays())
    write_history_csv(os.path.join(out_dir, "search_history.csv"), history)
    with open(os.path.join(out_dir, "audit.jsonl"), "w") as fh:
        for rec in state.audit:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_history_csv(path, history):
    cols = HISTORY_HEADER.split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in history:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                             for c in cols])

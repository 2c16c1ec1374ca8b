"""Command-line pipeline: search -> derive -> train -> evaluate.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
abort (last checkpoint retained), 1 anything else. ``--threads 1`` pins
the BLAS pools before numpy loads, which is what makes rerun outputs
byte-identical; heavyweight imports therefore live inside the command
handlers, not at module scope.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from ..errors import (CheckpointError, ConfigurationError, ContractError,
                      DataError, DimensionError, GenotypeError, NumericsError,
                      SpeakerNasError)
from .config import load_run_config, write_config_snapshot

THREAD_ENV = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
              "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS")


def _apply_threads(mode: str) -> None:
    if mode == "1":
        for var in THREAD_ENV:
            os.environ[var] = "1"


def _out_dir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


class Corpus:
    """Features plus role-tagged items, shared by every command."""

    def __init__(self, features, splits, trials, label_map):
        self.features = features
        self.splits = splits  # role-ish name -> [(utterance_id, speaker_id)]
        self.trials = trials
        self.label_map = label_map


def _load_corpus(data_cfg: dict, seed: int, roles) -> Corpus:
    from ..audio import (build_label_map, features_for, read_manifest,
                         read_trials, read_wav, synth_dataset)

    bins = data_cfg["feature_bins"]
    if data_cfg["synth"]:
        ds = synth_dataset(
            data_cfg["num_speakers"], data_cfg["utterances_per_speaker"],
            seed=seed,
            verification_speakers=data_cfg["verification_speakers"],
            verification_utterances=data_cfg["verification_utterances"],
        )
        splits = {
            "search-train": ds.search_train.items,
            "search-val": ds.search_val.items,
            "train": ds.train.items,
            "test": ds.test.items,
            "verification": ds.verification.items,
        }
        needed = {u for role in roles for u, _ in splits[role]}
        trials = ds.verification.trial_pairs
        if "verification" in roles:
            needed |= {u for p in trials for u in (p.utterance_a, p.utterance_b)}
        waveforms = {u: ds.waveforms[u] for u in needed}
        label_map = ds.speaker_labels
    else:
        manifest_keys = {
            "search-train": "manifest_search_train",
            "search-val": "manifest_search_val",
            "train": "manifest_train",
            "test": "manifest_test",
        }
        splits, waveforms = {}, {}
        for role in roles:
            if role == "verification":
                continue
            path = data_cfg[manifest_keys[role]]
            if not path:
                raise ConfigurationError(
                    f"[data] {manifest_keys[role]} is required for this command"
                )
            entries = read_manifest(path)
            splits[role] = [(utt, spk) for utt, spk, _ in entries]
            for utt, spk, wav_path in entries:
                waveforms[utt] = read_wav(wav_path, utterance_id=utt,
                                          speaker_id=spk)
        trials = []
        if "verification" in roles:
            if not data_cfg["trials"]:
                raise ConfigurationError("[data] trials is required for "
                                         "verification evaluation")
            trials = read_trials(data_cfg["trials"])
            ver_path = data_cfg["manifest_verification"]
            if not ver_path:
                raise ConfigurationError("[data] manifest_verification is "
                                         "required for verification "
                                         "evaluation")
            entries = read_manifest(ver_path)
            known = {utt: (spk, p) for utt, spk, p in entries}
            needed = {u for p in trials for u in (p.utterance_a, p.utterance_b)}
            missing = sorted(needed - set(known))
            if missing:
                raise DataError(f"trials reference utterances missing from "
                                f"the verification manifest: {missing[:5]}")
            items = []
            for utt in sorted(needed):
                spk, wav_path = known[utt]
                waveforms[utt] = read_wav(wav_path, utterance_id=utt,
                                          speaker_id=spk)
                items.append((utt, spk))
            splits["verification"] = items
        train_like = splits.get("train") or splits.get("search-train") or []
        label_map = build_label_map(train_like) if train_like else {}
    features = features_for(waveforms, feature_bins=bins)
    return Corpus(features, splits, trials, label_map)


def _crop_arrays(corpus: Corpus, role: str, data_cfg: dict, seed: int,
                 stream: int, crops: int = 1):
    import numpy as np

    from ..audio import classification_arrays

    rng = np.random.default_rng([seed, stream])
    return classification_arrays(corpus.features, corpus.splits[role],
                                 corpus.label_map, rng,
                                 frames=data_cfg["crop_frames"],
                                 crops_per_utterance=crops)


def _data_snapshot(data_cfg: dict) -> dict:
    return {k: v for k, v in data_cfg.items() if v not in (None, "")}


def cmd_search(args) -> int:
    sections = load_run_config(args.config)
    seed = args.seed if args.seed is not None else sections["run"].get("seed", 0)
    overrides = dict(sections["search"])
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.cells is not None:
        overrides["num_cells"] = args.cells
    if args.channels is not None:
        overrides["init_channels"] = args.channels

    from ..search import SupernetConfig, run_search
    from ..space import arch_entropy

    out = _out_dir(args)
    data_cfg = sections["data"]
    corpus = _load_corpus(data_cfg, seed, roles=("search-train", "search-val"))
    cfg = SupernetConfig(num_classes=len(corpus.label_map), seed=seed,
                         **overrides)
    write_config_snapshot(os.path.join(out, "config.resolved.cfg"), {
        "run": {"seed": seed},
        "data": _data_snapshot(data_cfg),
        "search": {
            "cells": cfg.num_cells, "channels": cfg.init_channels,
            "epochs": cfg.epochs, "batch_size": cfg.batch_size,
            "lr_omega": cfg.lr_omega, "lr_alpha": cfg.lr_alpha,
            "weight_decay": cfg.weight_decay,
            "entropy_patience": cfg.entropy_patience,
        },
    })
    train = _crop_arrays(corpus, "search-train", data_cfg, seed, stream=313)
    val = _crop_arrays(corpus, "search-val", data_cfg, seed, stream=631)

    def progress(row):
        print(f"epoch {row['epoch']}: train_loss={row['train_loss']:.4f} "
              f"val_loss={row['val_loss']:.4f} "
              f"entropy={row['entropy_total']:.4f}")

    state, history = run_search(cfg, train, val, out_dir=out,
                                progress=progress)
    h_n, h_r, h_total = arch_entropy(state.arch)
    print(f"search done: {len(history)} epochs, entropy {h_total:.4f} "
          f"(normal {h_n:.4f}, reduction {h_r:.4f})")
    print(f"wrote {os.path.join(out, 'alpha.ckpt')}")
    return 0


def cmd_derive(args) -> int:
    from ..autodiff import load_checkpoint
    from ..genotype import derive_genotype, save_genotype
    from ..space import ArchParams

    arrays = load_checkpoint(args.alpha)
    for name in ("alpha_normal", "alpha_reduction"):
        if name not in arrays:
            raise GenotypeError(
                f"{args.alpha}: missing tensor {name!r} (expected two 14x8 "
                f"architecture matrices)"
            )
    arch = ArchParams.from_arrays(arrays["alpha_normal"],
                                  arrays["alpha_reduction"])
    genotype = derive_genotype(arch)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    save_genotype(args.out, genotype)
    for cell_name, cell in (("normal", genotype.normal),
                            ("reduction", genotype.reduction)):
        for node_idx, choices in enumerate(cell, start=2):
            ops_text = ", ".join(f"{c.op}(from {c.pred}, p={c.p:.4f})"
                                 for c in choices)
            print(f"{cell_name} node {node_idx}: {ops_text}")
    print(f"wrote {args.out}")
    return 0


def _network_config(sections, args, num_classes, seed):
    from ..genotype import NetworkConfig

    overrides = dict(sections["train"])
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.cells is not None:
        overrides["num_cells"] = args.cells
    if args.channels is not None:
        overrides["init_channels"] = args.channels
    return NetworkConfig(num_classes=num_classes, seed=seed, **overrides)


def _train_snapshot(seed, data_cfg, cfg) -> dict:
    return {
        "run": {"seed": seed},
        "data": _data_snapshot(data_cfg),
        "train": {
            "cells": cfg.num_cells, "channels": cfg.init_channels,
            "epochs": cfg.epochs, "batch_size": cfg.batch_size,
            "lr": cfg.lr, "weight_decay": cfg.weight_decay,
        },
    }


def cmd_train(args) -> int:
    sections = load_run_config(args.config)
    seed = args.seed if args.seed is not None else sections["run"].get("seed", 0)

    from ..genotype import build_network, load_genotype, train_from_scratch

    out = _out_dir(args)
    data_cfg = sections["data"]
    genotype = load_genotype(args.genotype)
    corpus = _load_corpus(data_cfg, seed, roles=("train",))
    cfg = _network_config(sections, args, len(corpus.label_map), seed)
    write_config_snapshot(os.path.join(out, "config.resolved.cfg"),
                          _train_snapshot(seed, data_cfg, cfg))
    x, y = _crop_arrays(corpus, "train", data_cfg, seed, stream=947,
                        crops=data_cfg["crops_per_utterance"])
    network = build_network(genotype, cfg)

    def progress(row):
        print(f"epoch {row['epoch']}: loss={row['train_loss']:.4f} "
              f"acc={row['train_acc']:.4f}")

    history = train_from_scratch(network, (x, y), cfg, out_dir=out,
                                 progress=progress)
    print(f"train done: {len(history)} epochs, "
          f"final loss {history[-1]['train_loss']:.4f}")
    print(f"wrote {os.path.join(out, 'model.ckpt')}")
    return 0


def cmd_evaluate(args) -> int:
    sections = load_run_config(args.config)
    seed = args.seed if args.seed is not None else sections["run"].get("seed", 0)

    from ..autodiff import load_checkpoint
    from ..genotype import build_network, load_genotype
    from ..metrics import (evaluate_identification, evaluate_verification,
                           metrics_report)

    out = _out_dir(args)
    data_cfg = sections["data"]
    genotype = load_genotype(args.genotype)
    roles = ("train", "test") if args.mode == "identification" else \
        ("train", "verification")
    corpus = _load_corpus(data_cfg, seed, roles=roles)
    cfg = _network_config(sections, args, len(corpus.label_map), seed)
    network = build_network(genotype, cfg)
    try:
        network.load_state_arrays(load_checkpoint(args.model))
    except DimensionError as exc:
        raise DimensionError(
            f"checkpoint {args.model} is incompatible with this "
            f"genotype/config: {exc}"
        ) from exc
    network.eval()

    frames, hop = data_cfg["crop_frames"], data_cfg["segment_hop"]
    identification = verification = None
    if args.mode == "identification":
        identification = evaluate_identification(
            network, corpus.features, corpus.splits["test"], corpus.label_map,
            frames=frames, hop=hop)
        _write_logits_csv(os.path.join(out, "logits.csv"), identification)
    else:
        verification = evaluate_verification(
            network, corpus.features, corpus.trials, frames=frames, hop=hop,
            scores_csv=os.path.join(out, "scores.csv"))
    report = metrics_report(network, identification, verification)
    with open(os.path.join(out, "metrics.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for key in sorted(report):
        print(f"{key} = {report[key]}")
    return 0


def _write_logits_csv(path, result) -> None:
    import csv

    classes = result.logits.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance", "label"]
                        + [f"logit_{c}" for c in range(classes)])
        for utt, label, row in zip(result.utterances, result.labels,
                                   result.logits):
            writer.writerow([utt, int(label)] + [repr(float(v)) for v in row])


def cmd_synth_data(args) -> int:
    from ..audio import synth_dataset, write_manifest, write_trials, write_wav

    out = _out_dir(args)
    wav_dir = os.path.join(out, "wav")
    os.makedirs(wav_dir, exist_ok=True)
    ds = synth_dataset(args.num_speakers, args.utterances_per_speaker,
                       seed=args.seed if args.seed is not None else 0)
    for utt, wave in sorted(ds.waveforms.items()):
        write_wav(os.path.join(wav_dir, f"{utt}.wav"), wave)
    manifests = {
        "manifest_search_train": ("search_train.csv", ds.search_train),
        "manifest_search_val": ("search_val.csv", ds.search_val),
        "manifest_train": ("train.csv", ds.train),
        "manifest_test": ("test.csv", ds.test),
    }
    for filename, split in manifests.values():
        write_manifest(
            os.path.join(out, filename),
            [(utt, spk, os.path.join("wav", f"{utt}.wav"))
             for utt, spk in split.items],
        )
    ver_manifest = [(utt, spk, os.path.join("wav", f"{utt}.wav"))
                    for utt, spk in ds.verification.items]
    write_manifest(os.path.join(out, "verification.csv"), ver_manifest)
    write_trials(os.path.join(out, "trials.csv"), ds.verification.trial_pairs)
    print(f"wrote {len(ds.waveforms)} WAVs and manifests under {out}")
    return 0


def cmd_plot(args) -> int:
    import csv

    from .plotting import render_line_svg

    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {args.csv!r}: {exc}") from exc
    if not rows:
        raise DataError(f"{args.csv!r}: no data rows")
    available = [c for c in rows[0] if c != "epoch"]
    if "epoch" not in rows[0]:
        raise DataError(f"{args.csv!r}: no 'epoch' column; "
                        f"found {sorted(rows[0])}")
    columns = args.columns.split(",") if args.columns else available
    unknown = [c for c in columns if c not in available]
    if unknown:
        raise ConfigurationError(
            f"unknown column(s) {unknown}; available: {available}"
        )
    xs = [float(r["epoch"]) for r in rows]
    series = {c: [float(r[c]) for r in rows] for c in columns}
    svg = render_line_svg(xs, series, title=os.path.basename(args.csv))
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    with open(args.out, "w") as fh:
        fh.write(svg)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speakernas",
        description="Differentiable architecture search for "
                    "speaker-recognition CNNs",
    )
    parser.add_argument("--threads", choices=("1", "auto"), default="1",
                        help="BLAS thread pool; 1 gives bit-reproducible runs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", default=None, help="INI run config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("search", help="bilevel architecture search")
    common(p)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--channels", type=int, default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("derive", help="discretize architecture logits")
    p.add_argument("--alpha", required=True, help="alpha.ckpt from search")
    p.add_argument("--out", required=True, help="genotype JSON path")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("train", help="train a derived network from scratch")
    common(p)
    p.add_argument("--genotype", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--channels", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="identification / verification metrics")
    common(p)
    p.add_argument("--genotype", required=True)
    p.add_argument("--model", required=True, help="model.ckpt from train")
    p.add_argument("--mode", choices=("identification", "verification"),
                   default="identification")
    p.add_argument("--epochs", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--channels", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth-data", help="write a synthetic corpus to disk")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--num-speakers", type=int, default=4)
    p.add_argument("--utterances-per-speaker", type=int, default=25)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("plot", help="render history CSV columns as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--columns", default=None,
                   help="comma-separated column names (default: all)")
    p.add_argument("--out", required=True, help="SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_threads(args.threads)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, CheckpointError, GenotypeError, DimensionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        note = f" (last checkpoint: {exc.checkpoint_path})" \
            if exc.checkpoint_path else ""
        print(f"numerical abort: {exc}{note}", file=sys.stderr)
        return 4
    except (ContractError, SpeakerNasError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

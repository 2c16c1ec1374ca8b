"""Discretization of converged architecture parameters, plus genotype IO.

Each intermediate node keeps its two strongest incoming edges, where an
edge's strength is the softmax probability of its best candidate op with
the no-connection op excluded. Ties resolve deterministically: lower
alpha row first, then lower op index. The retained pair always spans two
distinct predecessors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import GenotypeError
from ..space import (
    NUM_EDGES,
    NUM_INTERMEDIATE,
    NUM_OPS,
    OP_INDEX,
    OP_NAMES,
    ArchParams,
    OpKind,
    edge_index,
    softmax_probs,
)

GENOTYPE_VERSION = 1


class EdgeChoice(NamedTuple):
    pred: int
    op: str
    p: float


@dataclass(frozen=True)
class Genotype:
    """Two discrete cells: 4 nodes x 2 (predecessor, op, probability)."""

    normal: tuple
    reduction: tuple
    version: int = GENOTYPE_VERSION

    def __post_init__(self):
        for label, nodes in (("normal", self.normal), ("reduction", self.reduction)):
            validate_cell(nodes, label)

    def all_choices(self):
        for nodes in (self.normal, self.reduction):
            for node in nodes:
                yield from node


def validate_cell(nodes, label):
    if len(nodes) != NUM_INTERMEDIATE:
        raise GenotypeError(
            f"{label}: expected {NUM_INTERMEDIATE} node specs, got {len(nodes)}"
        )
    for pos, node in enumerate(nodes):
        target = pos + 2
        if len(node) != 2:
            raise GenotypeError(
                f"{label} node x{target}: expected 2 retained ops, got {len(node)}"
            )
        preds = set()
        for choice in node:
            if choice.op not in OP_INDEX:
                raise GenotypeError(
                    f"{label} node x{target}: unknown op {choice.op!r}"
                )
            if choice.op == "zero":
                raise GenotypeError(
                    f"{label} node x{target}: the zero op cannot be retained"
                )
            if not isinstance(choice.pred, int) or not 0 <= choice.pred < target:
                raise GenotypeError(
                    f"{label} node x{target}: predecessor {choice.pred!r} "
                    f"out of range [0, {target})"
                )
            if not math.isfinite(choice.p):
                raise GenotypeError(
                    f"{label} node x{target}: non-finite probability {choice.p!r}"
                )
            preds.add(choice.pred)
        if len(preds) != 2:
            raise GenotypeError(
                f"{label} node x{target}: retained ops must come from two "
                f"distinct predecessors, got {sorted(preds)}"
            )


def _derive_cell(alpha: np.ndarray):
    if not np.all(np.isfinite(alpha)):
        raise GenotypeError("architecture parameters contain non-finite values")
    probs = softmax_probs(alpha)
    nodes = []
    for target in range(2, 2 + NUM_INTERMEDIATE):
        scored = []
        for pred in range(target):
            row = probs[edge_index(target, pred)]
            # best candidate with zero excluded; argmax takes the lowest
            # index on exact ties, which is the documented tie-break
            op = int(np.argmax(row[: OpKind.ZERO]))
            scored.append((-row[op], pred, op, row[op]))
        scored.sort()
        top2 = sorted(scored[:2], key=lambda s: s[1])
        nodes.append(tuple(
            EdgeChoice(pred=pred, op=OP_NAMES[op], p=float(p))
            for _, pred, op, p in top2
        ))
    return tuple(nodes)


def derive_genotype(arch: ArchParams) -> Genotype:
    return Genotype(
        normal=_derive_cell(arch.normal.data),
        reduction=_derive_cell(arch.reduction.data),
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _choice_to_json(c: EdgeChoice):
    return [["pred", c.pred], ["op", c.op], ["p", c.p]]


def genotype_to_json(g: Genotype) -> str:
    doc = {
        "version": g.version,
        "normal": [[_choice_to_json(c) for c in node] for node in g.normal],
        "reduction": [[_choice_to_json(c) for c in node] for node in g.reduction],
    }
    return json.dumps(doc, indent=2)


def _parse_choice(obj, where):
    if (not isinstance(obj, list) or len(obj) != 3
            or any(not isinstance(pair, list) or len(pair) != 2 for pair in obj)):
        raise GenotypeError(
            f"{where}: each retained op must be three [name, value] pairs"
        )
    fields = {}
    for key, value in obj:
        if key in fields:
            raise GenotypeError(f"{where}: duplicate field {key!r}")
        fields[key] = value
    if set(fields) != {"pred", "op", "p"}:
        raise GenotypeError(
            f"{where}: fields must be exactly pred/op/p, got {sorted(fields)}"
        )
    if not isinstance(fields["pred"], int) or isinstance(fields["pred"], bool):
        raise GenotypeError(f"{where}: pred must be an integer")
    if not isinstance(fields["op"], str):
        raise GenotypeError(f"{where}: op must be a string")
    if not isinstance(fields["p"], (int, float)) or isinstance(fields["p"], bool):
        raise GenotypeError(f"{where}: p must be a number")
    return EdgeChoice(pred=fields["pred"], op=fields["op"], p=float(fields["p"]))


def genotype_from_json(text: str) -> Genotype:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GenotypeError(f"genotype is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise GenotypeError("genotype document must be a JSON object")
    extra = set(doc) - {"version", "normal", "reduction"}
    if extra:
        raise GenotypeError(f"unknown genotype fields: {sorted(extra)}")
    for key in ("version", "normal", "reduction"):
        if key not in doc:
            raise GenotypeError(f"genotype field {key!r} is missing")
    if doc["version"] != GENOTYPE_VERSION:
        raise GenotypeError(
            f"genotype version {doc['version']!r} is incompatible with "
            f"version {GENOTYPE_VERSION}"
        )

    def parse_cell(label):
        nodes = doc[label]
        if not isinstance(nodes, list):
            raise GenotypeError(f"{label}: node list expected")
        parsed = []
        for pos, node in enumerate(nodes):
            if not isinstance(node, list):
                raise GenotypeError(f"{label} node x{pos + 2}: list expected")
            parsed.append(tuple(
                _parse_choice(c, f"{label} node x{pos + 2}") for c in node
            ))
        return tuple(parsed)

    return Genotype(normal=parse_cell("normal"), reduction=parse_cell("reduction"))


def save_genotype(path, g: Genotype):
    with open(path, "w") as fh:
        fh.write(genotype_to_json(g) + "\n")


def load_genotype(path) -> Genotype:
    with open(path) as fh:
        return genotype_from_json(fh.read())

"""Single-type graphs with a unified feature layout, multi-design merging and splits.

Node rows are ordered by kind (gate, pin, net, io) then by original id. Each
feature row is ``[kind one-hot | slot values]`` where the slots are the union
of every kind's attribute columns; a slot that does not belong to the row's
kind stays zero. The slot map therefore depends only on view and stage, so
designs built with the same settings share one width.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .circuit_db import Vocabularies
from .def_parser import Stage
from .errors import EmptyMerge, SchemaMismatch, TooFewDesigns
from .labels import LABEL_FIELDS
from .views import ENTITY_KINDS, CircuitGraph, EdgeTable, NodeTable

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_RATIOS = (70, 15, 15)


@dataclass
class HomoGraph:
    view: str
    stage: Stage
    variant: str
    node_kinds: tuple[str, ...]
    edge_kinds: tuple[str, ...]
    node_slots: tuple[str, ...]
    edge_slots: tuple[str, ...]
    # dtype per slot ("i64" or "f64"), needed to restore typed columns
    slot_dtypes: dict[str, str]
    node_kind: np.ndarray
    node_orig: np.ndarray
    node_x: np.ndarray
    edge_kind: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    direction: np.ndarray
    edge_x: np.ndarray
    # provenance columns per edge (-1 where an edge kind has none)
    edge_provenance: dict[str, np.ndarray]
    label_level: str  # "node", "edge" or "" when unlabeled
    label_names: tuple[str, ...]
    y: np.ndarray
    label_carrier: np.ndarray
    label_mask: np.ndarray
    node_design: np.ndarray
    edge_design: np.ndarray
    design_names: list[str]
    meta: dict = field(default_factory=dict)
    vocab: Optional[Vocabularies] = field(default=None, compare=False, repr=False)
    # per-design split assignment (index into SPLIT_NAMES), set by split_dataset
    design_split: Optional[np.ndarray] = None
    split_policy: Optional[dict] = None

    @property
    def num_nodes(self) -> int:
        return len(self.node_kind)

    @property
    def num_edges(self) -> int:
        return len(self.src)

    @property
    def num_designs(self) -> int:
        return len(self.design_names)

    @property
    def label_design(self) -> np.ndarray:
        return self.node_design if self.label_level != "edge" else self.edge_design

    def undirected_edges(self) -> tuple[int, np.ndarray, np.ndarray]:
        return self.num_nodes, self.src, self.dst

    def slot_presence(self, level: str = "node") -> np.ndarray:
        """Boolean matrix marking which slots carry a real attribute for each row."""
        kinds = self.node_kinds if level == "node" else self.edge_kinds
        slots = self.node_slots if level == "node" else self.edge_slots
        owners = self.meta["node_slot_owner" if level == "node" else "edge_slot_owner"]
        table = np.zeros((len(kinds), len(slots)), dtype=bool)
        for k, kind in enumerate(kinds):
            for s, slot in enumerate(slots):
                table[k, s] = slot in owners.get(kind, ())
        tags = self.node_kind if level == "node" else self.edge_kind
        return table[tags]

    def equals(self, other: "HomoGraph") -> bool:
        scalars = ("view", "stage", "variant", "node_kinds", "edge_kinds", "node_slots", "edge_slots",
                   "slot_dtypes", "label_level", "label_names", "design_names", "meta", "split_policy")
        if any(getattr(self, a) != getattr(other, a) for a in scalars):
            return False
        arrays = ("node_kind", "node_orig", "node_x", "edge_kind", "src", "dst", "direction", "edge_x",
                  "y", "label_carrier", "label_mask", "node_design", "edge_design")
        for a in arrays:
            x, z = getattr(self, a), getattr(other, a)
            if x.dtype != z.dtype or x.shape != z.shape or not np.array_equal(x, z):
                return False
        if (self.design_split is None) != (other.design_split is None):
            return False
        if self.design_split is not None and not np.array_equal(self.design_split, other.design_split):
            return False
        if list(self.edge_provenance) != list(other.edge_provenance):
            return False
        return all(np.array_equal(self.edge_provenance[k], other.edge_provenance[k]) for k in self.edge_provenance)


def _dtype_tag(col: np.ndarray) -> str:
    return "f64" if col.dtype.kind == "f" else "i64"


def _slot_layout(tables: Sequence[Union[NodeTable, EdgeTable]]) -> tuple[tuple[str, ...], dict[str, tuple[str, ...]]]:
    slots: list[str] = []
    owner: dict[str, tuple[str, ...]] = {}
    for t in tables:
        owner[t.key] = tuple(t.columns)
        for name in t.columns:
            if name not in slots:
                slots.append(name)
    return tuple(slots), owner


def _fill(kinds_count: int, tables, slots: Sequence[str], rows: int, tags: np.ndarray) -> np.ndarray:
    x = np.zeros((rows, kinds_count + len(slots)), dtype=np.float64)
    x[np.arange(rows), tags] = 1.0
    col_of = {name: kinds_count + i for i, name in enumerate(slots)}
    start = 0
    for t in tables:
        n = t.row_count()
        for name, col in t.columns.items():
            x[start : start + n, col_of[name]] = col
        start += n
    return x


def to_homograph(g: CircuitGraph) -> HomoGraph:
    """Flatten a typed graph into one node set and one edge set."""
    node_tables = sorted(g.node_tables.values(), key=lambda t: ENTITY_KINDS.index(t.kind))
    edge_tables = list(g.edge_tables.values())
    node_kinds = tuple(t.kind for t in node_tables)
    edge_kinds = tuple(t.key for t in edge_tables)
    node_slots, node_owner = _slot_layout(node_tables)
    edge_slots, edge_owner = _slot_layout(edge_tables)
    dtypes = {name: _dtype_tag(col) for t in (*node_tables, *edge_tables) for name, col in t.columns.items()}

    counts = [t.count for t in node_tables]
    offsets = dict(zip(node_kinds, np.concatenate([[0], np.cumsum(counts)])[:-1].tolist()))
    V = int(sum(counts))
    node_kind = np.repeat(np.arange(len(node_tables), dtype=np.int64), counts)
    node_orig = np.concatenate([np.arange(c, dtype=np.int64) for c in counts]) if counts else np.zeros(0, np.int64)
    node_x = _fill(len(node_kinds), node_tables, node_slots, V, node_kind)

    e_counts = [t.row_count() for t in edge_tables]
    E = int(sum(e_counts))
    edge_kind = np.repeat(np.arange(len(edge_tables), dtype=np.int64), e_counts)

    def cat(parts: list[np.ndarray]) -> np.ndarray:
        return np.concatenate(parts).astype(np.int64) if parts else np.zeros(0, np.int64)

    src = cat([t.src + offsets[t.src_kind] for t in edge_tables])
    dst = cat([t.dst + offsets[t.dst_kind] for t in edge_tables])
    direction = cat([t.direction for t in edge_tables])
    edge_x = _fill(len(edge_kinds), edge_tables, edge_slots, E, edge_kind)
    prov_names: list[str] = []
    for t in edge_tables:
        prov_names.extend(n for n in t.provenance if n not in prov_names)
    provenance = {
        name: cat([t.provenance.get(name, np.full(t.row_count(), -1, np.int64)) for t in edge_tables])
        for name in prov_names
    }

    # labels live on whichever level holds the net-carrying tables
    stage = g.label_stage
    label_names = tuple(f"net.{n}" for n in LABEL_FIELDS[stage]) if stage is not None else ()
    carriers = [t for t in g.tables() if t.carries_net and t.labels]
    level = ""
    if carriers:
        level = "node" if isinstance(carriers[0], NodeTable) else "edge"
    tables = node_tables if level != "edge" else edge_tables
    rows = V if level != "edge" else E
    y = np.zeros((rows, len(label_names)), dtype=np.float64)
    carrier = np.zeros(rows, dtype=bool)
    mask = np.zeros(rows, dtype=bool)
    start = 0
    for t in tables:
        n = t.row_count()
        if t.carries_net and t.labels:
            for j, name in enumerate(label_names):
                y[start : start + n, j] = t.labels[name]
            carrier[start : start + n] = True
            mask[start : start + n] = t.label_mask
        start += n

    meta = dict(g.meta)
    meta["node_slot_owner"] = {k: list(v) for k, v in node_owner.items()}
    meta["edge_slot_owner"] = {k: list(v) for k, v in edge_owner.items()}
    meta["edge_endpoints"] = {t.key: [t.src_kind, t.relation, t.dst_kind, t.carries_net] for t in edge_tables}
    meta["edge_provenance_names"] = {t.key: list(t.provenance) for t in edge_tables}
    meta["node_carries_net"] = {t.kind: t.carries_net for t in node_tables}
    meta["label_stage"] = stage.value if stage is not None else None
    meta["label_dtypes"] = {name: "i64" for name in label_names}
    return HomoGraph(
        view=g.view, stage=g.stage, variant=g.variant, node_kinds=node_kinds, edge_kinds=edge_kinds,
        node_slots=node_slots, edge_slots=edge_slots, slot_dtypes=dtypes, node_kind=node_kind,
        node_orig=node_orig, node_x=node_x, edge_kind=edge_kind, src=src, dst=dst, direction=direction,
        edge_x=edge_x, edge_provenance=provenance, label_level=level, label_names=label_names, y=y,
        label_carrier=carrier, label_mask=mask, node_design=np.zeros(V, np.int64),
        edge_design=np.zeros(E, np.int64), design_names=[g.design_name], meta=meta, vocab=g.vocab,
    )


def _restore(values: np.ndarray, tag: str) -> np.ndarray:
    return values.astype(np.int64) if tag == "i64" else values.astype(np.float64)


def from_homograph(h: HomoGraph) -> CircuitGraph:
    """Rebuild the typed graph of a single-design homograph."""
    if h.num_designs != 1:
        raise ValueError("from_homograph needs a single-design graph; split the merged graph first")
    K = len(h.node_kinds)
    node_owner = h.meta["node_slot_owner"]
    label_stage = Stage.parse(h.meta["label_stage"]) if h.meta.get("label_stage") else None
    meta = {k: v for k, v in h.meta.items() if k not in (
        "node_slot_owner", "edge_slot_owner", "edge_endpoints", "edge_provenance_names", "node_carries_net",
        "label_stage", "label_dtypes")}
    g = CircuitGraph(h.design_names[0], h.view, h.stage, variant=h.variant, label_stage=label_stage,
                     meta=meta, vocab=h.vocab)

    def attach(table, rows: np.ndarray) -> None:
        if h.label_level and table.carries_net and label_stage is not None:
            table.labels = {name: _restore(h.y[rows, j], "i64") for j, name in enumerate(h.label_names)}
            table.label_mask = h.label_mask[rows].copy()

    for k, kind in enumerate(h.node_kinds):
        rows = np.flatnonzero(h.node_kind == k)
        cols = {name: _restore(h.node_x[rows, K + h.node_slots.index(name)], h.slot_dtypes[name])
                for name in node_owner[kind]}
        table = NodeTable(kind, len(rows), cols, h.meta["node_carries_net"][kind])
        if h.label_level == "node":
            attach(table, rows)
        g.node_tables[kind] = table
    offsets = g.node_offsets()
    KE = len(h.edge_kinds)
    for k, key in enumerate(h.edge_kinds):
        rows = np.flatnonzero(h.edge_kind == k)
        src_kind, relation, dst_kind, carries = h.meta["edge_endpoints"][key]
        cols = {name: _restore(h.edge_x[rows, KE + h.edge_slots.index(name)], h.slot_dtypes[name])
                for name in h.meta["edge_slot_owner"][key]}
        prov = {name: h.edge_provenance[name][rows] for name in h.meta["edge_provenance_names"][key]}
        table = EdgeTable(src_kind, relation, dst_kind, h.src[rows] - offsets[src_kind],
                          h.dst[rows] - offsets[dst_kind], h.direction[rows].copy(), prov, cols, carries)
        if h.label_level == "edge":
            attach(table, rows)
        g.edge_tables[key] = table
    return g


# ---------------------------------------------------------------------------
# merging
# ---------------------------------------------------------------------------


def _vocab_conflicts(a: Vocabularies, b: Vocabularies) -> list[str]:
    out = []
    for kind in ("cell_type", "layer_id", "orientation", "net_type", "place_flag", "pin_type"):
        ma, mb = getattr(a, kind), getattr(b, kind)
        for name in sorted(set(ma) & set(mb)):
            if ma[name] != mb[name]:
                out.append(f"vocab {kind}: {name!r} is {ma[name]} vs {mb[name]}")
        ra = {v: k for k, v in ma.items()}
        for name in sorted(set(mb) - set(ma)):
            if mb[name] in ra:
                out.append(f"vocab {kind}: id {mb[name]} is {ra[mb[name]]!r} vs {name!r}")
    return out


def _union_vocab(vocabs: Sequence[Vocabularies]) -> Vocabularies:
    merged = vocabs[0].copy()
    for v in vocabs[1:]:
        for kind in ("cell_type", "layer_id"):
            getattr(merged, kind).update(getattr(v, kind))
    return merged


def merge_graphs(graphs: Sequence[HomoGraph]) -> HomoGraph:
    """Disjoint union of homographs that share one layout and compatible vocabularies."""
    graphs = list(graphs)
    if not graphs:
        raise EmptyMerge("nothing to merge")
    ref = graphs[0]
    diffs = []
    for i, h in enumerate(graphs[1:], 1):
        for attr in ("view", "stage", "variant", "node_kinds", "edge_kinds", "node_slots", "edge_slots",
                     "label_level", "label_names"):
            if getattr(h, attr) != getattr(ref, attr):
                diffs.append(f"graph {i} {attr}: {getattr(h, attr)!r} != {getattr(ref, attr)!r}")
        for key in ("pin_geom", "expansion", "include_special"):
            if h.meta.get(key) != ref.meta.get(key):
                diffs.append(f"graph {i} {key}: {h.meta.get(key)!r} != {ref.meta.get(key)!r}")
        if h.vocab is not None and ref.vocab is not None:
            diffs.extend(f"graph {i} {d}" for d in _vocab_conflicts(ref.vocab, h.vocab))
    if diffs:
        raise SchemaMismatch(diffs)

    node_off = np.cumsum([0] + [h.num_nodes for h in graphs])
    design_off = np.cumsum([0] + [h.num_designs for h in graphs])
    prov_names: list[str] = []
    for h in graphs:
        prov_names.extend(n for n in h.edge_provenance if n not in prov_names)

    def cat(attr: str, shift=None) -> np.ndarray:
        parts = []
        for i, h in enumerate(graphs):
            arr = getattr(h, attr)
            parts.append(arr + shift[i] if shift is not None else arr)
        return np.concatenate(parts)

    meta = {k: v for k, v in ref.meta.items() if k not in ("counts", "unrepresentable", "vocab_hash")}
    meta["design_counts"] = [
        c for h in graphs for c in (h.meta.get("design_counts") or [h.meta.get("counts")])]
    vocabs = [h.vocab for h in graphs if h.vocab is not None]
    merged = HomoGraph(
        view=ref.view, stage=ref.stage, variant=ref.variant, node_kinds=ref.node_kinds,
        edge_kinds=ref.edge_kinds, node_slots=ref.node_slots, edge_slots=ref.edge_slots,
        slot_dtypes=dict(ref.slot_dtypes), node_kind=cat("node_kind"), node_orig=cat("node_orig"),
        node_x=np.concatenate([h.node_x for h in graphs]), edge_kind=cat("edge_kind"),
        src=cat("src", node_off), dst=cat("dst", node_off), direction=cat("direction"),
        edge_x=np.concatenate([h.edge_x for h in graphs]),
        edge_provenance={
            n: np.concatenate([h.edge_provenance.get(n, np.full(h.num_edges, -1, np.int64)) for h in graphs])
            for n in prov_names
        },
        label_level=ref.label_level, label_names=ref.label_names,
        y=np.concatenate([h.y for h in graphs]), label_carrier=cat("label_carrier"),
        label_mask=cat("label_mask"), node_design=cat("node_design", design_off),
        edge_design=cat("edge_design", design_off),
        design_names=[n for h in graphs for n in h.design_names], meta=meta,
        vocab=_union_vocab(vocabs) if vocabs else None,
    )
    return merged


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


def split_counts(n: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> tuple[int, int, int]:
    """Designs per split: floor for train and val, remainder to test, then fill empty splits.

    An empty split takes one design from the currently largest split.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValueError(f"ratios must be three non-negative numbers, got {ratios!r}")
    if n < 3:
        raise TooFewDesigns(f"{n} design(s) cannot fill train, val and test splits")
    total = sum(ratios)
    train = int(n * ratios[0] // total)
    val = int(n * ratios[1] // total)
    counts = [train, val, n - train - val]
    for i in range(3):
        if counts[i] == 0:
            donor = max(range(3), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return tuple(counts)


@dataclass
class SplitMasks:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    design_split: np.ndarray
    policy: dict

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"train": self.train, "val": self.val, "test": self.test}


def masks_for(h: HomoGraph, design_split: np.ndarray, policy: dict) -> SplitMasks:
    per_row = design_split[h.label_design]
    labeled = h.label_mask
    return SplitMasks(labeled & (per_row == 0), labeled & (per_row == 1), labeled & (per_row == 2),
                      design_split, policy)


def split_dataset(merged: HomoGraph, policy: str = "design", ratios: Sequence[float] = DEFAULT_RATIOS,
                  seed: int = 0) -> SplitMasks:
    """Assign whole designs to train/val/test and derive masks over labeled rows."""
    if policy != "design":
        raise ValueError(f"unsupported split policy {policy!r}; only 'design' is available")
    n = merged.num_designs
    counts = split_counts(n, ratios)
    order = np.random.default_rng(seed).permutation(n)
    design_split = np.empty(n, dtype=np.int64)
    design_split[order] = np.repeat(np.arange(3, dtype=np.int64), counts)
    info = {"policy": policy, "ratios": [float(r) for r in ratios], "seed": int(seed), "counts": list(counts)}
    merged.design_split = design_split
    merged.split_policy = info
    return masks_for(merged, design_split, info)

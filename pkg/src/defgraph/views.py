"""The five circuit-graph views and the attribute-parity check.

Every view is assembled from the same :class:`DesignDatabase`; only the place
where an entity's attributes live changes:

====  ===============================  ==============================================
view  nodes                            attribute carriers
====  ===============================  ==============================================
b     gates, pins, nets, IOs           every entity on its own node
c     gates, nets, IOs                 pin attributes on gate-net incidence edges
d     gates, pins, IOs                 net attributes on pin-level net edges
e     pins, IOs                        net edges plus gate edges (input -> output pin)
f     gates, IOs                       net + reduced pin attributes on gate-level edges
====  ===============================  ==============================================

Column names are ``<entity>.<field>`` so a column always identifies which
entity it describes, whatever table it sits in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .circuit_db import (
    KIND_IO,
    KIND_PIN,
    NO_ID,
    PIN_INOUT,
    PIN_INPUT,
    PIN_OUTPUT,
    DesignDatabase,
    Net,
    Pin,
    Vocabularies,
)
from .def_parser import Stage
from .errors import StageUnavailable
from .labels import LabelSet, attach_labels, compute_labels

logger = logging.getLogger(__name__)

VIEWS = ("b", "c", "d", "e", "f")
VARIANTS = ("canonical", "table2")
EXPANSION_RULE = "star-from-driver, clique-if-driverless"
PIN_GEOMETRY = "gate_origin"
ENTITY_KINDS = ("gate", "pin", "net", "io")

# reducer per pin field when several pins collapse onto one gate-level edge
PIN_FIELD_REDUCERS = {"pin_type": "min", "cell_type": "min"}
NO_PIN = -1


def entity_fields(stage: Union[Stage, str]) -> dict[str, tuple[str, ...]]:
    """Feature fields per entity kind at ``stage``."""
    stage = Stage.parse(stage)
    routed = stage is Stage.ROUTING
    gate = ("x", "y", "cell_type", "orientation", "area", "place_flag", "power_leak") if routed else (
        "cell_type", "area", "power_leak")
    net = ("net_type", "pin_count", "hpwl") if routed else ("net_type", "pin_count")
    return {
        "gate": gate,
        "pin": ("pin_type", "cell_type"),
        "net": net,
        "io": ("x", "y", "orientation", "layer_id"),
    }


# ---------------------------------------------------------------------------
# graph containers
# ---------------------------------------------------------------------------


@dataclass
class NodeTable:
    kind: str
    count: int
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    carries_net: bool = False
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    label_mask: Optional[np.ndarray] = None

    @property
    def key(self) -> str:
        return self.kind

    @property
    def location(self) -> str:
        return f"node:{self.kind}"

    def net_ids(self) -> np.ndarray:
        return np.arange(self.count, dtype=np.int64)

    def row_count(self) -> int:
        return self.count


@dataclass
class EdgeTable:
    src_kind: str
    relation: str
    dst_kind: str
    src: np.ndarray
    dst: np.ndarray
    # +1: src -> dst, -1: dst -> src, 0: undirected
    direction: np.ndarray
    provenance: dict[str, np.ndarray] = field(default_factory=dict)
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    carries_net: bool = False
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    label_mask: Optional[np.ndarray] = None

    @property
    def key(self) -> str:
        return f"{self.src_kind}-{self.relation}-{self.dst_kind}"

    @property
    def location(self) -> str:
        return f"edge:{self.relation}"

    def net_ids(self) -> np.ndarray:
        return self.provenance["net"]

    def row_count(self) -> int:
        return len(self.src)


@dataclass
class CircuitGraph:
    design_name: str
    view: str
    stage: Stage
    node_tables: dict[str, NodeTable] = field(default_factory=dict)
    edge_tables: dict[str, EdgeTable] = field(default_factory=dict)
    variant: str = "canonical"
    label_stage: Optional[Stage] = None
    meta: dict = field(default_factory=dict)
    vocab: Optional[Vocabularies] = field(default=None, compare=False, repr=False)

    def tables(self) -> Iterator[Union[NodeTable, EdgeTable]]:
        yield from self.node_tables.values()
        yield from self.edge_tables.values()

    @property
    def num_nodes(self) -> int:
        return sum(t.count for t in self.node_tables.values())

    @property
    def num_edges(self) -> int:
        return sum(len(t.src) for t in self.edge_tables.values())

    def schema(self) -> dict[str, dict[str, set[str]]]:
        """entity kind -> field -> set of locations holding it."""
        out: dict[str, dict[str, set[str]]] = {}
        for table in self.tables():
            for col in table.columns:
                entity, fname = col.split(".", 1)
                out.setdefault(entity, {}).setdefault(fname, set()).add(table.location)
        return out

    def node_offsets(self) -> dict[str, int]:
        offsets, total = {}, 0
        for kind, table in self.node_tables.items():
            offsets[kind] = total
            total += table.count
        return offsets

    def undirected_edges(self) -> tuple[int, np.ndarray, np.ndarray]:
        """Global node count and endpoint arrays with nodes numbered table by table."""
        offsets = self.node_offsets()
        srcs, dsts = [], []
        for t in self.edge_tables.values():
            srcs.append(t.src + offsets[t.src_kind])
            dsts.append(t.dst + offsets[t.dst_kind])
        if not srcs:
            return self.num_nodes, np.zeros(0, np.int64), np.zeros(0, np.int64)
        return self.num_nodes, np.concatenate(srcs), np.concatenate(dsts)

    def check(self) -> list[str]:
        """Structural invariants: endpoints exist, column lengths match row counts."""
        problems = []
        for table in self.tables():
            rows = table.row_count()
            for name, col in (*table.columns.items(), *table.labels.items()):
                if len(col) != rows:
                    problems.append(f"{table.key}.{name}: {len(col)} values for {rows} rows")
            if table.label_mask is not None and len(table.label_mask) != rows:
                problems.append(f"{table.key}: label mask length {len(table.label_mask)} != {rows}")
        for t in self.edge_tables.values():
            for side, kind, ids in (("src", t.src_kind, t.src), ("dst", t.dst_kind, t.dst)):
                nodes = self.node_tables.get(kind)
                if nodes is None:
                    problems.append(f"{t.key}: {side} kind {kind!r} has no node table")
                elif len(ids) and (ids.min() < 0 or ids.max() >= nodes.count):
                    problems.append(f"{t.key}: {side} id out of range")
            if len(t.direction) != len(t.src) or len(t.dst) != len(t.src):
                problems.append(f"{t.key}: endpoint/direction lengths differ")
            for name, prov in t.provenance.items():
                if len(prov) != len(t.src):
                    problems.append(f"{t.key}: provenance {name} length mismatch")
            if t.carries_net and ("net" not in t.provenance or np.any(t.provenance["net"] < 0)):
                problems.append(f"{t.key}: net-derived edge without a source net")
        return problems

    def equals(self, other: "CircuitGraph") -> bool:
        if (self.design_name, self.view, self.stage, self.variant, self.label_stage) != (
            other.design_name, other.view, other.stage, other.variant, other.label_stage
        ):
            return False
        if self.meta != other.meta:
            return False
        if list(self.node_tables) != list(other.node_tables) or list(self.edge_tables) != list(other.edge_tables):
            return False
        for a, b in zip(self.tables(), other.tables()):
            if a.key != b.key or a.carries_net != b.carries_net or a.row_count() != b.row_count():
                return False
            if not _same_arrays(a.columns, b.columns) or not _same_arrays(a.labels, b.labels):
                return False
            if (a.label_mask is None) != (b.label_mask is None):
                return False
            if a.label_mask is not None and not np.array_equal(a.label_mask, b.label_mask):
                return False
            if isinstance(a, EdgeTable):
                if not (np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst)
                        and np.array_equal(a.direction, b.direction)
                        and _same_arrays(a.provenance, b.provenance)):
                    return False
        return True


def _same_arrays(a: dict[str, np.ndarray], b: dict[str, np.ndarray]) -> bool:
    if list(a) != list(b):
        return False
    return all(a[k].dtype == b[k].dtype and np.array_equal(a[k], b[k]) for k in a)


# ---------------------------------------------------------------------------
# entity attribute columns
# ---------------------------------------------------------------------------


def _gate_columns(db: DesignDatabase, fields: Sequence[str], rows: Optional[np.ndarray] = None) -> dict:
    src = {
        "x": db.gate_x, "y": db.gate_y, "cell_type": db.gate_cell_type,
        "orientation": db.gate_orientation, "area": db.gate_area,
        "place_flag": db.gate_place_flag, "power_leak": db.gate_power_leak,
    }
    return {f"gate.{f}": (src[f] if rows is None else src[f][rows]).copy() for f in fields}


def _pin_columns(db: DesignDatabase, fields: Sequence[str], rows: Optional[np.ndarray] = None) -> dict:
    src = {"pin_type": db.pin_type, "cell_type": db.pin_cell_type}
    return {f"pin.{f}": (src[f] if rows is None else src[f][rows]).copy() for f in fields}


def _net_columns(db: DesignDatabase, fields: Sequence[str], labels: LabelSet, rows: Optional[np.ndarray] = None) -> dict:
    src = {"net_type": db.net_type, "pin_count": db.net_pin_count, "hpwl": labels.hpwl}
    return {f"net.{f}": (src[f] if rows is None else src[f][rows]).copy() for f in fields}


def _io_columns(db: DesignDatabase, fields: Sequence[str]) -> dict:
    src = {"x": db.io_x, "y": db.io_y, "orientation": db.io_orientation, "layer_id": db.io_layer_id}
    return {f"io.{f}": src[f].copy() for f in fields}


def _direction_from_pin_type(pin_type: np.ndarray) -> np.ndarray:
    # output pins drive the net, input pins are driven by it
    return np.select([pin_type == PIN_OUTPUT, pin_type == PIN_INPUT], [1, -1], 0).astype(np.int64)


def _direction_from_io(direction: np.ndarray) -> np.ndarray:
    # a top-level input port drives its net
    return np.select([direction == PIN_INPUT, direction == PIN_OUTPUT], [1, -1], 0).astype(np.int64)


# ---------------------------------------------------------------------------
# net expansion
# ---------------------------------------------------------------------------


def expand_net(net: Net, granularity: str = "pin", db: Optional[DesignDatabase] = None) -> list[tuple]:
    """Pairwise edges for one net.

    With a known driver the net becomes a star from the driver to every other
    member; otherwise a clique with the smaller member first. Members are
    ``(kind, id)`` tuples; at ``granularity="gate"`` pins collapse onto their
    owning gate (``db`` required) and duplicates merge.
    """
    if granularity not in ("pin", "gate"):
        raise ValueError(f"unknown granularity {granularity!r}")

    def lift(member: tuple[str, int]) -> tuple[str, int]:
        if granularity == "gate" and member[0] == "pin":
            return ("gate", int(db.pin_owner[member[1]]))
        return member

    order = {"pin": 0, "gate": 0, "io": 1}
    members = sorted({lift(m) for m in net.members}, key=lambda m: (order[m[0]], m[1]))
    if len(members) < 2:
        return []
    if net.driver is not None:
        driver = lift(net.driver)
        return [(driver, m) for m in members if m != driver]
    return [(a, b) for i, a in enumerate(members) for b in members[i + 1 :]]


@dataclass
class _Expansion:
    net: np.ndarray
    src_kind: np.ndarray  # 0 = pin/gate, 1 = io
    src: np.ndarray
    dst_kind: np.ndarray
    dst: np.ndarray
    directed: np.ndarray


def _expand_all(db: DesignDatabase, granularity: str) -> _Expansion:
    """Vectorised :func:`expand_net` over every net of ``db``."""
    mk = db.member_kind
    mid = db.member_id
    mnet = db.member_net_index()
    dk = db.net_driver_kind
    did = db.net_driver_id
    if granularity == "gate":
        is_pin = mk == KIND_PIN
        mid = np.where(is_pin, db.pin_owner[np.where(is_pin, mid, 0)] if len(mid) else mid, mid)
        drv_pin = dk == KIND_PIN
        did = np.where(drv_pin, db.pin_owner[np.where(drv_pin, did, 0)] if db.num_pins else did, did)
    big = max(db.num_gates, db.num_pins, db.num_ios, 1) + 1
    code = mk * big + mid  # orders pins/gates before IOs
    stride = 2 * big
    key = np.unique(mnet * stride + code)
    net = key // stride
    code = key % stride
    N = db.num_nets
    sizes = np.bincount(net, minlength=N)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    has_driver = dk != NO_ID
    drv_code = np.where(has_driver, dk * big + did, -1)

    parts = []
    # star edges
    star_rows = np.flatnonzero(has_driver[net] & (sizes[net] >= 2) & (code != drv_code[net]))
    if len(star_rows):
        n = net[star_rows]
        parts.append((n, drv_code[n], code[star_rows], np.ones(len(n), dtype=bool)))
    # clique edges, grouped by net size
    clique_nets = np.flatnonzero(~has_driver & (sizes >= 2))
    for k in np.unique(sizes[clique_nets]):
        nets_k = clique_nets[sizes[clique_nets] == k]
        a, b = np.triu_indices(int(k), 1)
        base = starts[nets_k][:, None]
        parts.append((
            np.repeat(nets_k, len(a)),
            code[(base + a).ravel()],
            code[(base + b).ravel()],
            np.zeros(len(nets_k) * len(a), dtype=bool),
        ))
    if parts:
        n = np.concatenate([p[0] for p in parts])
        s = np.concatenate([p[1] for p in parts])
        d = np.concatenate([p[2] for p in parts])
        directed = np.concatenate([p[3] for p in parts])
        order = np.argsort(n, kind="stable")
        n, s, d, directed = n[order], s[order], d[order], directed[order]
    else:
        n = s = d = np.zeros(0, dtype=np.int64)
        directed = np.zeros(0, dtype=bool)
    return _Expansion(n, s // big, s % big, d // big, d % big, directed)


def _net_edge_tables(
    exp: _Expansion, db: DesignDatabase, base_kind: str, net_cols: dict[str, np.ndarray],
    extra_cols: Optional[dict[str, np.ndarray]] = None,
) -> dict[str, EdgeTable]:
    """Split expanded pairs into typed tables; mixed pairs always put the non-IO end first."""
    tables = {}
    direction = exp.directed.astype(np.int64)
    swap = (exp.src_kind == KIND_IO) & (exp.dst_kind != KIND_IO)
    src = np.where(swap, exp.dst, exp.src)
    dst = np.where(swap, exp.src, exp.dst)
    src_kind = np.where(swap, exp.dst_kind, exp.src_kind)
    dst_kind = np.where(swap, exp.src_kind, exp.dst_kind)
    direction = np.where(swap, -direction, direction)
    names = {0: base_kind, 1: "io"}
    for sk, dk in ((0, 0), (0, 1), (1, 1)):
        rows = np.flatnonzero((src_kind == sk) & (dst_kind == dk))
        nets = exp.net[rows]
        cols = {name: col[nets] for name, col in net_cols.items()}
        if extra_cols:
            cols.update({name: col[rows] for name, col in extra_cols.items()})
        table = EdgeTable(
            names[sk], "net", names[dk], src[rows], dst[rows], direction[rows],
            provenance={"net": nets}, columns=cols, carries_net=True,
        )
        tables[table.key] = table
    return tables


# ---------------------------------------------------------------------------
# pin aggregation (view f)
# ---------------------------------------------------------------------------


def aggregate_pin_features(pins: Sequence[Pin], fields: Sequence[str] = ("pin_type", "cell_type")) -> dict[str, float]:
    """Reduce several pins to one attribute vector: numeric fields by mean, categorical by min id."""
    if not pins:
        raise ValueError("aggregate_pin_features needs at least one pin")
    out = {}
    for f in fields:
        values = [getattr(p, f) for p in pins]
        if PIN_FIELD_REDUCERS.get(f, "mean") == "min":
            out[f] = min(values)
        else:
            out[f] = sum(values) / len(values)
    return out


def _aggregated_edge_pins(db: DesignDatabase, exp: _Expansion, fields: Sequence[str]) -> dict[str, np.ndarray]:
    """Reduce, per gate-level edge, the net's member pins sitting on either endpoint gate."""
    pm = db.member_kind == KIND_PIN
    pins = db.member_id[pm]
    pnet = db.member_net_index()[pm]
    owner = db.pin_owner[pins] if len(pins) else pins
    G = max(db.num_gates, 1)
    gkey = pnet * G + owner
    order = np.argsort(gkey, kind="stable")
    gkey_sorted = gkey[order]
    uniq, first = np.unique(gkey_sorted, return_index=True)
    counts = np.diff(np.append(first, len(gkey_sorted)))

    def lookup(kind: np.ndarray, ids: np.ndarray) -> np.ndarray:
        idx = np.full(len(ids), -1, dtype=np.int64)
        gate_side = kind == 0
        if len(uniq) and gate_side.any():
            k = exp.net[gate_side] * G + ids[gate_side]
            pos = np.searchsorted(uniq, k)
            pos = np.minimum(pos, len(uniq) - 1)
            hit = uniq[pos] == k
            vals = np.where(hit, pos, -1)
            idx[gate_side] = vals
        return idx

    a = lookup(exp.src_kind, exp.src)
    b = lookup(exp.dst_kind, exp.dst)
    src_values = {"pin_type": db.pin_type, "cell_type": db.pin_cell_type}
    out = {}
    for f in fields:
        values = src_values[f][pins][order] if len(pins) else np.zeros(0, dtype=np.int64)
        if PIN_FIELD_REDUCERS.get(f, "mean") == "min":
            grp = np.minimum.reduceat(values, first) if len(first) else values
            big = np.iinfo(np.int64).max
            va = np.where(a >= 0, grp[np.maximum(a, 0)] if len(grp) else big, big)
            vb = np.where(b >= 0, grp[np.maximum(b, 0)] if len(grp) else big, big)
            res = np.minimum(va, vb)
            out[f"pin.{f}"] = np.where(res == big, NO_PIN, res).astype(np.int64)
        else:
            grp_sum = np.add.reduceat(values.astype(np.float64), first) if len(first) else values.astype(float)
            sa = np.where(a >= 0, grp_sum[np.maximum(a, 0)] if len(grp_sum) else 0.0, 0.0)
            sb = np.where(b >= 0, grp_sum[np.maximum(b, 0)] if len(grp_sum) else 0.0, 0.0)
            ca = np.where(a >= 0, counts[np.maximum(a, 0)] if len(counts) else 0, 0)
            cb = np.where(b >= 0, counts[np.maximum(b, 0)] if len(counts) else 0, 0)
            total = ca + cb
            out[f"pin.{f}"] = np.where(total > 0, (sa + sb) / np.maximum(total, 1), float(NO_PIN))
    return out


# ---------------------------------------------------------------------------
# view construction
# ---------------------------------------------------------------------------


def _connect_tables(db: DesignDatabase, pin_cols: Optional[dict] = None, gate_side: bool = False,
                    pin_relation: str = "connects") -> dict[str, EdgeTable]:
    """Pin/IO incidence edges to net nodes (views b, c and the table2 variant of e)."""
    mnet = db.member_net_index()
    pm = db.member_kind == KIND_PIN
    im = db.member_kind == KIND_IO
    pins = db.member_id[pm]
    tables = {}
    src = db.pin_owner[pins] if gate_side else pins
    pin_table = EdgeTable(
        "gate" if gate_side else "pin", pin_relation, "net", src, mnet[pm],
        _direction_from_pin_type(db.pin_type[pins]),
        provenance={"net": mnet[pm], "pin": pins},
        columns=pin_cols(pins) if pin_cols else {},
    )
    tables[pin_table.key] = pin_table
    ios = db.member_id[im]
    io_table = EdgeTable(
        "io", "connects", "net", ios, mnet[im], _direction_from_io(db.io_direction[ios]),
        provenance={"net": mnet[im]},
    )
    tables[io_table.key] = io_table
    return tables


def _has_pin_table(db: DesignDatabase) -> EdgeTable:
    P = db.num_pins
    return EdgeTable("gate", "has_pin", "pin", db.pin_owner.copy(), np.arange(P, dtype=np.int64),
                     np.zeros(P, dtype=np.int64))


def _gate_pin_pairs(db: DesignDatabase) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Input-to-output pin pairs inside each gate (inout pins count on both sides)."""
    P = db.num_pins
    if P == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    order = np.lexsort((np.arange(P), db.pin_owner))
    owner = db.pin_owner[order]
    uniq, first, sizes = np.unique(owner, return_index=True, return_counts=True)
    srcs, dsts = [], []
    for k in np.unique(sizes):
        if k < 2:
            continue
        starts = first[sizes == k]
        a, b = np.nonzero(~np.eye(int(k), dtype=bool))
        srcs.append(order[(starts[:, None] + a).ravel()])
        dsts.append(order[(starts[:, None] + b).ravel()])
    if not srcs:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    s = np.concatenate(srcs)
    d = np.concatenate(dsts)
    ts, td = db.pin_type[s], db.pin_type[d]
    keep = (ts != PIN_OUTPUT) & (td != PIN_INPUT)
    both_inout = (ts == PIN_INOUT) & (td == PIN_INOUT)
    keep &= ~(both_inout & (s > d))
    s, d = s[keep], d[keep]
    directed = ~((db.pin_type[s] == PIN_INOUT) & (db.pin_type[d] == PIN_INOUT))
    order2 = np.lexsort((d, s, db.pin_owner[s]))
    s, d, directed = s[order2], d[order2], directed[order2]
    return s, d, directed.astype(np.int64)


def _unrepresentable(db: DesignDatabase, view: str, variant: str, exp_pin=None, exp_gate=None,
                     gate_pairs=None) -> dict[str, int]:
    """Entity instances the view has no place for (e.g. single-member nets in edge views)."""
    out = {}
    if view == "d" or (view == "e" and variant == "canonical"):
        out["net"] = int(db.num_nets - len(np.unique(exp_pin.net)))
    if view == "f":
        out["net"] = int(db.num_nets - len(np.unique(exp_gate.net)))
    if view == "c" or (view == "e" and variant == "table2"):
        out["pin"] = int(np.sum(db.pin_net == NO_ID))
    if view == "e" and variant == "canonical":
        out["gate"] = int(db.num_gates - len(np.unique(db.pin_owner[gate_pairs[0]])))
    if view == "e" and variant == "table2":
        out["gate"] = int(db.num_gates - len(np.unique(db.pin_owner[db.pin_net != NO_ID])))
    if view == "f":
        out["pin"] = 0  # folded into edge aggregates
    return {k: v for k, v in out.items() if v}


def build_view(
    db: DesignDatabase,
    view: str,
    stage: Union[Stage, str],
    labels: Optional[LabelSet] = None,
    variant: str = "canonical",
    include_special: bool = False,
) -> CircuitGraph:
    """Materialise one view of ``db`` at ``stage`` with its labels attached."""
    view = view.lower()
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}; expected one of {', '.join(VIEWS)}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown view variant {variant!r}")
    stage = Stage.parse(stage)
    if stage.rank > db.stage.rank:
        raise StageUnavailable(
            f"{stage.value} features requested but {db.design_name!r} is only at {db.stage.value} stage")
    if labels is None or labels.stage is not stage:
        labels = compute_labels(db, stage, include_special=include_special)
    fields = entity_fields(stage)
    g = CircuitGraph(db.design_name, view, stage, variant=variant if view == "e" else "canonical", vocab=db.vocab)
    G, P, N, I = db.num_gates, db.num_pins, db.num_nets, db.num_ios

    def add_node(kind: str, count: int, cols: dict, carries_net: bool = False) -> None:
        g.node_tables[kind] = NodeTable(kind, count, cols, carries_net)

    def add_edges(tables: dict[str, EdgeTable]) -> None:
        g.edge_tables.update(tables)

    net_cols = _net_columns(db, fields["net"], labels)
    exp_pin = exp_gate = gate_pairs = None
    if view == "b":
        add_node("gate", G, _gate_columns(db, fields["gate"]))
        add_node("pin", P, _pin_columns(db, fields["pin"]))
        add_node("net", N, net_cols, carries_net=True)
        add_node("io", I, _io_columns(db, fields["io"]))
        add_edges({"gate-has_pin-pin": _has_pin_table(db)})
        add_edges(_connect_tables(db))
    elif view == "c":
        add_node("gate", G, _gate_columns(db, fields["gate"]))
        add_node("net", N, net_cols, carries_net=True)
        add_node("io", I, _io_columns(db, fields["io"]))
        add_edges(_connect_tables(db, pin_cols=lambda rows: _pin_columns(db, fields["pin"], rows),
                                  gate_side=True, pin_relation="pin"))
    elif view == "d":
        add_node("gate", G, _gate_columns(db, fields["gate"]))
        add_node("pin", P, _pin_columns(db, fields["pin"]))
        add_node("io", I, _io_columns(db, fields["io"]))
        add_edges({"gate-has_pin-pin": _has_pin_table(db)})
        exp_pin = _expand_all(db, "pin")
        add_edges(_net_edge_tables(exp_pin, db, "pin", net_cols))
    elif view == "e" and variant == "canonical":
        add_node("pin", P, _pin_columns(db, fields["pin"]))
        add_node("io", I, _io_columns(db, fields["io"]))
        exp_pin = _expand_all(db, "pin")
        add_edges(_net_edge_tables(exp_pin, db, "pin", net_cols))
        gate_pairs = s, d, directed = _gate_pin_pairs(db)
        owner = db.pin_owner[s]
        gate_edges = EdgeTable("pin", "gate", "pin", s, d, directed, provenance={"gate": owner},
                               columns=_gate_columns(db, fields["gate"], owner))
        add_edges({gate_edges.key: gate_edges})
    elif view == "e":
        add_node("gate", G, {})
        add_node("net", N, net_cols, carries_net=True)
        add_node("io", I, _io_columns(db, fields["io"]))

        def incidence_cols(rows: np.ndarray) -> dict:
            cols = _gate_columns(db, fields["gate"], db.pin_owner[rows])
            cols.update(_pin_columns(db, fields["pin"], rows))
            return cols

        tables = _connect_tables(db, pin_cols=incidence_cols, gate_side=True, pin_relation="pin")
        tables["gate-pin-net"].provenance["gate"] = db.pin_owner[tables["gate-pin-net"].provenance["pin"]]
        add_edges(tables)
    else:  # f
        add_node("gate", G, _gate_columns(db, fields["gate"]))
        add_node("io", I, _io_columns(db, fields["io"]))
        exp_gate = _expand_all(db, "gate")
        pin_cols = _aggregated_edge_pins(db, exp_gate, fields["pin"])
        add_edges(_net_edge_tables(exp_gate, db, "gate", net_cols, extra_cols=pin_cols))

    g.meta = {
        "pin_geom": PIN_GEOMETRY,
        "expansion": EXPANSION_RULE,
        "view_variant": g.variant,
        "include_special": bool(labels.include_special),
        "vocab_hash": db.vocab.digest(),
        "counts": db.counts(),
        "unrepresentable": _unrepresentable(db, view, g.variant, exp_pin, exp_gate, gate_pairs),
    }
    if stage is not Stage.FLOORPLAN:
        attach_labels(g, labels, stage)
    return g


def build_all_views(db: DesignDatabase, stage: Union[Stage, str], variant: str = "canonical",
                    include_special: bool = False) -> dict[str, CircuitGraph]:
    stage = Stage.parse(stage)
    if stage.rank > db.stage.rank:
        raise StageUnavailable(f"{stage.value} requested but design is at {db.stage.value} stage")
    labels = compute_labels(db, stage, include_special=include_special)
    return {v: build_view(db, v, stage, labels, variant) for v in VIEWS}


# ---------------------------------------------------------------------------
# attribute parity
# ---------------------------------------------------------------------------


@dataclass
class ParityReport:
    passed: bool
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        head = "PASS" if self.passed else "FAIL"
        return "\n".join([head, *(f"  fail: {f}" for f in self.failures), *(f"  note: {n}" for n in self.notes)])


def _instance_values(g: CircuitGraph, entity: str, fname: str):
    """(instance ids, values) for one attribute, or None when the location is an aggregate."""
    col = f"{entity}.{fname}"
    ids, vals = [], []
    for table in g.tables():
        if col not in table.columns:
            continue
        if isinstance(table, NodeTable):
            ids.append(np.arange(table.count, dtype=np.int64))
        elif entity in table.provenance:
            ids.append(table.provenance[entity])
        else:
            return None
        vals.append(table.columns[col])
    if not ids:
        return np.zeros(0, np.int64), np.zeros(0)
    return np.concatenate(ids), np.concatenate(vals)


def check_parity(graphs: Union[dict[str, CircuitGraph], Iterable[CircuitGraph]]) -> ParityReport:
    """Verify that every view carries the same attributes, each in exactly one place.

    Three levels are checked: the per-entity field sets agree across views;
    within a view each field lives in one location (one node table or one edge
    relation); and per instance, attribute copies agree with each other and
    across views, and every instance the view can represent is present.
    """
    graphs = list(graphs.values()) if isinstance(graphs, dict) else list(graphs)
    report = ParityReport(True)
    if not graphs:
        return report

    def fail(msg: str) -> None:
        report.passed = False
        report.failures.append(msg)

    schemas = {g.view: g.schema() for g in graphs}
    reference = graphs[0]
    union: dict[str, set[str]] = {}
    for schema in schemas.values():
        for entity, fields in schema.items():
            union.setdefault(entity, set()).update(fields)
    for g in graphs:
        schema = schemas[g.view]
        for entity, fields in sorted(union.items()):
            missing = fields - set(schema.get(entity, {}))
            for fname in sorted(missing):
                fail(f"view {g.view}: field {entity}.{fname} is missing")
        for entity, fields in sorted(schema.items()):
            for fname, locations in sorted(fields.items()):
                if len(locations) > 1:
                    fail(f"view {g.view}: field {entity}.{fname} duplicated at {sorted(locations)}")
        # tables that share a location (e.g. pin-net-pin and io-net-io) must agree on columns
        by_location: dict[str, list] = {}
        for table in g.tables():
            by_location.setdefault(table.location, []).append(table)
        for location, tables in sorted(by_location.items()):
            expected = set().union(*(t.columns for t in tables))
            for t in tables:
                for col in sorted(expected - set(t.columns)):
                    fail(f"view {g.view}: field {col} missing from {t.key} at {location}")

    # instance level
    for entity, fields in sorted(union.items()):
        for fname in sorted(fields):
            seen: dict[str, tuple[np.ndarray, np.ndarray]] = {}
            for g in graphs:
                if entity not in schemas[g.view] or fname not in schemas[g.view][entity]:
                    continue
                got = _instance_values(g, entity, fname)
                if got is None:
                    continue
                ids, vals = got
                if len(ids) == 0:
                    uniq, first = ids, ids
                else:
                    order = np.argsort(ids, kind="stable")
                    ids, vals = ids[order], vals[order]
                    uniq, first = np.unique(ids, return_index=True)
                    if not np.array_equal(vals, np.repeat(vals[first], np.diff(np.append(first, len(ids))))):
                        fail(f"view {g.view}: copies of {entity}.{fname} disagree within one instance")
                seen[g.view] = (uniq, vals[first] if len(ids) else vals)
                total = g.meta.get("counts", {}).get(f"{entity}s")
                if total is not None:
                    skipped = g.meta.get("unrepresentable", {}).get(entity, 0)
                    if len(uniq) + skipped != total:
                        fail(f"view {g.view}: {entity}.{fname} present for {len(uniq)} of {total} instances "
                             f"({skipped} unrepresentable)")
            views = list(seen)
            for v in views[1:]:
                a_ids, a_vals = seen[views[0]]
                b_ids, b_vals = seen[v]
                common, ia, ib = np.intersect1d(a_ids, b_ids, return_indices=True)
                if not np.array_equal(a_vals[ia], b_vals[ib]):
                    fail(f"{entity}.{fname} values differ between views {views[0]} and {v}")
    for g in graphs:
        for entity, count in sorted(g.meta.get("unrepresentable", {}).items()):
            report.notes.append(f"view {g.view}: {count} {entity} instances have no attribute carrier")
    if reference.stage and any(g.stage is not reference.stage for g in graphs):
        fail("views were built at different stages")
    return report

"""Resolved circuit database built from a parsed DEF design.

Entities are stored column-wise (one numpy array per attribute) so graph views
can be assembled with vectorised indexing on designs with 10^5-10^6 pins. The
small :class:`Gate`, :class:`Pin`, :class:`Net` and :class:`IOPin` records are
convenience views over one row.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .def_parser import RawDesign, RoutedPath, Stage, detect_stage
from .errors import DanglingReference, MultiNetPin, Unplaced

logger = logging.getLogger(__name__)

ORIENTATION_CODES = {"N": 0, "S": 1, "E": 2, "W": 3, "FN": 4, "FS": 5, "FE": 6, "FW": 7}
NET_TYPES = {"signal": 0, "power": 1, "ground": 2, "clock": 3, "reset": 4, "scan": 5}
PLACE_FLAGS = {"unplaced": 0, "placed": 1, "fixed": 2, "cover": 3}
PIN_TYPES = {"input": 0, "output": 1, "inout": 2}

PIN_INPUT, PIN_OUTPUT, PIN_INOUT = 0, 1, 2
KIND_PIN, KIND_IO = 0, 1
NO_ID = -1

_TRAILING_INT = re.compile(r"(\d+)$")


@dataclass
class Vocabularies:
    """Stable integer encodings for the categorical fields.

    ``cell_type`` and ``layer_id`` grow as designs are resolved; the remaining
    maps are fixed. Sharing one instance across designs keeps ids consistent
    for merged datasets.
    """

    cell_type: dict[str, int] = field(default_factory=dict)
    layer_id: dict[str, int] = field(default_factory=dict)
    orientation: dict[str, int] = field(default_factory=lambda: dict(ORIENTATION_CODES))
    net_type: dict[str, int] = field(default_factory=lambda: dict(NET_TYPES))
    place_flag: dict[str, int] = field(default_factory=lambda: dict(PLACE_FLAGS))
    pin_type: dict[str, int] = field(default_factory=lambda: dict(PIN_TYPES))

    def cell_id(self, name: str) -> int:
        cid = self.cell_type.get(name)
        if cid is None:
            cid = self.cell_type[name] = len(self.cell_type)
        return cid

    def layer(self, name: str) -> int:
        """Layer index: trailing number of the name (metal6 -> 6), else next free id."""
        lid = self.layer_id.get(name)
        if lid is not None:
            return lid
        taken = set(self.layer_id.values())
        m = _TRAILING_INT.search(name)
        if m and int(m.group(1)) not in taken:
            lid = int(m.group(1))
        else:
            lid = max(taken, default=0) + 1
        self.layer_id[name] = lid
        return lid

    def to_tsv(self) -> str:
        rows = []
        for kind in ("cell_type", "layer_id", "orientation", "net_type", "place_flag", "pin_type"):
            mapping = getattr(self, kind)
            for name, idx in sorted(mapping.items(), key=lambda kv: (kv[1], kv[0])):
                rows.append(f"{kind}\t{name}\t{idx}\n")
        return "".join(rows)

    @classmethod
    def from_tsv(cls, text: str) -> "Vocabularies":
        vocab = cls(cell_type={}, layer_id={})
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                kind, name, idx = line.split("\t")
                getattr(vocab, kind)[name] = int(idx)
            except (ValueError, AttributeError):
                raise ValueError(f"vocabulary line {lineno}: malformed entry {line!r}") from None
        return vocab

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_tsv().encode("utf-8"))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabularies":
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_tsv().encode("utf-8")).hexdigest()

    def copy(self) -> "Vocabularies":
        return Vocabularies.from_tsv(self.to_tsv())


@dataclass
class TechTable:
    """Per-cell pin directions, area and leakage from a whitespace text table.

    Each line reads ``cell_name pin_name direction [area [leakage]]``; ``#``
    starts a comment.
    """

    pin_direction: dict[tuple[str, str], int] = field(default_factory=dict)
    cell_area: dict[str, float] = field(default_factory=dict)
    cell_leakage: dict[str, float] = field(default_factory=dict)
    cell_pins: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "TechTable":
        tech = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 3:
                raise ValueError(f"tech table line {lineno}: need at least cell, pin, direction")
            cell, pin, direction = parts[:3]
            code = PIN_TYPES.get(direction.lower())
            if code is None:
                raise ValueError(f"tech table line {lineno}: unknown direction {direction!r}")
            tech.pin_direction[(cell, pin)] = code
            pins = tech.cell_pins.setdefault(cell, [])
            if pin not in pins:
                pins.append(pin)
            if len(parts) > 3:
                tech.cell_area[cell] = float(parts[3])
            if len(parts) > 4:
                tech.cell_leakage[cell] = float(parts[4])
        return tech

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TechTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


# -- row views -------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    id: int
    name: str
    cell_type: int
    orientation: int
    x: Optional[int]
    y: Optional[int]
    place_flag: int
    area: float = 0.0
    power_leak: float = 0.0


@dataclass(frozen=True)
class Pin:
    id: int
    owner_gate: int
    pin_name: str
    pin_type: int
    cell_type: int
    x: Optional[int]
    y: Optional[int]


@dataclass(frozen=True)
class Net:
    id: int
    name: str
    net_type: int
    pin_count: int
    members: tuple[tuple[str, int], ...]
    driver: Optional[tuple[str, int]]


@dataclass(frozen=True)
class IOPin:
    id: int
    name: str
    direction: int
    x: Optional[int]
    y: Optional[int]
    orientation: int
    layer_id: int


def _i64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64)


@dataclass
class DesignDatabase:
    design_name: str
    stage: Stage
    vocab: Vocabularies
    dbu_per_micron: Optional[int] = None
    # gates
    gate_names: list[str] = field(default_factory=list)
    gate_cell_type: np.ndarray = field(default_factory=lambda: _i64([]))
    gate_orientation: np.ndarray = field(default_factory=lambda: _i64([]))
    gate_x: np.ndarray = field(default_factory=lambda: _i64([]))
    gate_y: np.ndarray = field(default_factory=lambda: _i64([]))
    gate_placed: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    gate_place_flag: np.ndarray = field(default_factory=lambda: _i64([]))
    gate_area: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gate_power_leak: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gate_missing_tech: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    # pins
    pin_names: list[str] = field(default_factory=list)
    pin_owner: np.ndarray = field(default_factory=lambda: _i64([]))
    pin_type: np.ndarray = field(default_factory=lambda: _i64([]))
    pin_cell_type: np.ndarray = field(default_factory=lambda: _i64([]))
    pin_x: np.ndarray = field(default_factory=lambda: _i64([]))
    pin_y: np.ndarray = field(default_factory=lambda: _i64([]))
    pin_net: np.ndarray = field(default_factory=lambda: _i64([]))
    # nets: members in CSR layout, kind 0 = pin, 1 = io
    net_names: list[str] = field(default_factory=list)
    net_type: np.ndarray = field(default_factory=lambda: _i64([]))
    net_pin_count: np.ndarray = field(default_factory=lambda: _i64([]))
    net_ptr: np.ndarray = field(default_factory=lambda: _i64([0]))
    member_kind: np.ndarray = field(default_factory=lambda: _i64([]))
    member_id: np.ndarray = field(default_factory=lambda: _i64([]))
    net_driver_kind: np.ndarray = field(default_factory=lambda: _i64([]))
    net_driver_id: np.ndarray = field(default_factory=lambda: _i64([]))
    net_routes: list[list[RoutedPath]] = field(default_factory=list)
    # ios
    io_names: list[str] = field(default_factory=list)
    io_direction: np.ndarray = field(default_factory=lambda: _i64([]))
    io_x: np.ndarray = field(default_factory=lambda: _i64([]))
    io_y: np.ndarray = field(default_factory=lambda: _i64([]))
    io_placed: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    io_orientation: np.ndarray = field(default_factory=lambda: _i64([]))
    io_layer_id: np.ndarray = field(default_factory=lambda: _i64([]))
    io_net: np.ndarray = field(default_factory=lambda: _i64([]))
    flags: dict[str, int] = field(default_factory=dict)

    @property
    def num_gates(self) -> int:
        return len(self.gate_names)

    @property
    def num_pins(self) -> int:
        return len(self.pin_names)

    @property
    def num_nets(self) -> int:
        return len(self.net_names)

    @property
    def num_ios(self) -> int:
        return len(self.io_names)

    def net_members(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.net_ptr[n], self.net_ptr[n + 1]
        return self.member_kind[lo:hi], self.member_id[lo:hi]

    def member_net_index(self) -> np.ndarray:
        """Net id of every entry in the member arrays."""
        return np.repeat(np.arange(self.num_nets, dtype=np.int64), np.diff(self.net_ptr))

    def gate(self, i: int) -> Gate:
        placed = bool(self.gate_placed[i])
        return Gate(
            i, self.gate_names[i], int(self.gate_cell_type[i]), int(self.gate_orientation[i]),
            int(self.gate_x[i]) if placed else None, int(self.gate_y[i]) if placed else None,
            int(self.gate_place_flag[i]), float(self.gate_area[i]), float(self.gate_power_leak[i]),
        )

    def pin(self, i: int) -> Pin:
        placed = bool(self.gate_placed[self.pin_owner[i]])
        return Pin(
            i, int(self.pin_owner[i]), self.pin_names[i], int(self.pin_type[i]), int(self.pin_cell_type[i]),
            int(self.pin_x[i]) if placed else None, int(self.pin_y[i]) if placed else None,
        )

    def net(self, i: int) -> Net:
        kinds, ids = self.net_members(i)
        label = ("pin", "io")
        members = tuple((label[k], int(m)) for k, m in zip(kinds, ids))
        dk = int(self.net_driver_kind[i])
        driver = None if dk == NO_ID else (label[dk], int(self.net_driver_id[i]))
        return Net(i, self.net_names[i], int(self.net_type[i]), int(self.net_pin_count[i]), members, driver)

    def io(self, i: int) -> IOPin:
        placed = bool(self.io_placed[i])
        return IOPin(
            i, self.io_names[i], int(self.io_direction[i]),
            int(self.io_x[i]) if placed else None, int(self.io_y[i]) if placed else None,
            int(self.io_orientation[i]), int(self.io_layer_id[i]),
        )

    def counts(self) -> dict[str, int]:
        return {"gates": self.num_gates, "pins": self.num_pins, "nets": self.num_nets, "ios": self.num_ios}


# -- net classification ------------------------------------------------------------

_USE_CLASSES = {
    "POWER": "power", "GROUND": "ground", "CLOCK": "clock", "SIGNAL": "signal",
    "RESET": "reset", "SCAN": "scan",
}
_NAME_SPLIT = re.compile(r"[^0-9a-z]+")


def classify_net(name: str, use_class: Optional[str] = None) -> int:
    """Map a net to its ``net_type`` id: DEF USE class first, then name heuristics."""
    if use_class:
        kind = _USE_CLASSES.get(use_class.upper())
        if kind is not None:
            return NET_TYPES[kind]
    lower = name.lower()
    if "rst" in lower or "reset" in lower:
        return NET_TYPES["reset"]
    words = set(_NAME_SPLIT.split(lower))
    if "scan" in lower or "se" in words or "si" in words:
        return NET_TYPES["scan"]
    if "clk" in lower or "clock" in lower:
        return NET_TYPES["clock"]
    return NET_TYPES["signal"]


# -- resolution ----------------------------------------------------------------------

_IO_DIRECTIONS = {"INPUT": PIN_INPUT, "OUTPUT": PIN_OUTPUT, "INOUT": PIN_INOUT, "FEEDTHRU": PIN_INOUT}


def resolve(
    d: RawDesign,
    vocab: Optional[Vocabularies] = None,
    tech: Optional[TechTable] = None,
    *,
    all_cell_pins: bool = False,
) -> DesignDatabase:
    """Resolve names to dense ids and materialise pins, nets and IOs.

    ``vocab`` is extended in place (first-seen order). With ``all_cell_pins``
    every pin the tech table lists for a gate's cell is created even when no
    net touches it.
    """
    if vocab is None:
        vocab = Vocabularies()
    tech = tech or TechTable()
    for layer in d.layer_names():
        vocab.layer(layer)

    # gates
    G = len(d.components)
    gate_index: dict[str, int] = {}
    cell_ids = np.empty(G, dtype=np.int64)
    orient = np.zeros(G, dtype=np.int64)
    gx = np.zeros(G, dtype=np.int64)
    gy = np.zeros(G, dtype=np.int64)
    placed = np.zeros(G, dtype=bool)
    flag = np.zeros(G, dtype=np.int64)
    area = np.zeros(G)
    leak = np.zeros(G)
    missing = np.zeros(G, dtype=bool)
    masters: list[str] = []
    cell_id = vocab.cell_id
    for i, comp in enumerate(d.components):
        gate_index[comp.name] = i
        masters.append(comp.cell_master)
        cell_ids[i] = cell_id(comp.cell_master)
        if comp.orientation is not None:
            orient[i] = ORIENTATION_CODES[comp.orientation]
        flag[i] = PLACE_FLAGS[comp.place_status.lower()]
        if comp.x is not None:
            placed[i] = True
            gx[i] = comp.x
            gy[i] = comp.y
        a = tech.cell_area.get(comp.cell_master)
        lk = tech.cell_leakage.get(comp.cell_master)
        area[i] = a or 0.0
        leak[i] = lk or 0.0
        missing[i] = a is None or lk is None

    # ios
    I = len(d.pins)
    io_index: dict[str, int] = {}
    io_dir = np.full(I, PIN_INOUT, dtype=np.int64)
    iox = np.zeros(I, dtype=np.int64)
    ioy = np.zeros(I, dtype=np.int64)
    io_placed = np.zeros(I, dtype=bool)
    io_orient = np.zeros(I, dtype=np.int64)
    io_layer = np.full(I, NO_ID, dtype=np.int64)
    for i, pin in enumerate(d.pins):
        io_index[pin.name] = i
        if pin.direction:
            io_dir[i] = _IO_DIRECTIONS.get(pin.direction.upper(), PIN_INOUT)
        if pin.x is not None:
            io_placed[i] = True
            iox[i] = pin.x
            ioy[i] = pin.y
        if pin.orientation is not None:
            io_orient[i] = ORIENTATION_CODES[pin.orientation]
        if pin.layer:
            io_layer[i] = vocab.layer(pin.layer)

    # pins and nets
    pin_index: dict[tuple[int, str], int] = {}
    pin_owner: list[int] = []
    pin_names: list[str] = []
    pin_types: list[int] = []
    pin_net: list[int] = []
    io_net = np.full(I, NO_ID, dtype=np.int64)
    net_ptr = [0]
    member_kind: list[int] = []
    member_id: list[int] = []
    net_types: list[int] = []
    drv_kind: list[int] = []
    drv_id: list[int] = []
    unknown_dir = 0
    small_nets = 0
    skipped_wildcards = 0
    direction_of = tech.pin_direction

    def new_pin(g: int, pname: str, net: int) -> int:
        nonlocal unknown_dir
        pid = len(pin_names)
        pin_index[(g, pname)] = pid
        pin_owner.append(g)
        pin_names.append(pname)
        code = direction_of.get((masters[g], pname))
        if code is None:
            code = PIN_INOUT
            unknown_dir += 1
        pin_types.append(code)
        pin_net.append(net)
        return pid

    if all_cell_pins:
        for g in range(G):
            for pname in tech.cell_pins.get(masters[g], ()):
                new_pin(g, pname, NO_ID)

    for n, net in enumerate(d.nets):
        drivers: list[tuple[int, int]] = []
        start = len(member_id)
        for owner, pname in net.connections:
            if owner == "PIN":
                io = io_index.get(pname)
                if io is None:
                    raise DanglingReference(net.name, f"PIN {pname}")
                if io_net[io] != NO_ID:
                    raise MultiNetPin(f"IO {pname!r} appears in nets {d.nets[io_net[io]].name!r} and {net.name!r}")
                io_net[io] = n
                member_kind.append(KIND_IO)
                member_id.append(io)
                if io_dir[io] == PIN_INPUT:
                    drivers.append((KIND_IO, io))
                continue
            if owner == "*":
                skipped_wildcards += 1
                continue
            g = gate_index.get(owner)
            if g is None:
                raise DanglingReference(net.name, owner)
            pid = pin_index.get((g, pname))
            if pid is None:
                pid = new_pin(g, pname, n)
            elif pin_net[pid] == NO_ID:
                pin_net[pid] = n
            else:
                other = d.nets[pin_net[pid]].name
                raise MultiNetPin(f"pin {owner}/{pname} appears in nets {other!r} and {net.name!r}")
            member_kind.append(KIND_PIN)
            member_id.append(pid)
            if pin_types[pid] == PIN_OUTPUT:
                drivers.append((KIND_PIN, pid))
        net_ptr.append(len(member_id))
        if len(member_id) - start < 2:
            small_nets += 1
        net_types.append(classify_net(net.name, net.use_class))
        if len(drivers) == 1:
            drv_kind.append(drivers[0][0])
            drv_id.append(drivers[0][1])
        else:
            drv_kind.append(NO_ID)
            drv_id.append(NO_ID)

    flags: dict[str, int] = {}
    if unknown_dir:
        flags["unknown_direction"] = unknown_dir
        logger.warning("%d pins have no direction in the tech table; typed inout", unknown_dir)
    if small_nets:
        flags["small_nets"] = small_nets
        logger.info("%d nets have fewer than two members", small_nets)
    if skipped_wildcards:
        flags["wildcard_connections"] = skipped_wildcards
        logger.warning("%d '*' connections in NETS ignored", skipped_wildcards)
    if missing.any():
        flags["missing_tech"] = int(missing.sum())

    owner_arr = _i64(pin_owner)
    db = DesignDatabase(
        design_name=d.design_name,
        stage=detect_stage(d),
        vocab=vocab,
        dbu_per_micron=d.dbu_per_micron,
        gate_names=[c.name for c in d.components],
        gate_cell_type=cell_ids,
        gate_orientation=orient,
        gate_x=gx,
        gate_y=gy,
        gate_placed=placed,
        gate_place_flag=flag,
        gate_area=area,
        gate_power_leak=leak,
        gate_missing_tech=missing,
        pin_names=pin_names,
        pin_owner=owner_arr,
        pin_type=_i64(pin_types),
        pin_cell_type=cell_ids[owner_arr] if len(owner_arr) else _i64([]),
        pin_x=np.where(placed[owner_arr], gx[owner_arr], 0) if len(owner_arr) else _i64([]),
        pin_y=np.where(placed[owner_arr], gy[owner_arr], 0) if len(owner_arr) else _i64([]),
        pin_net=_i64(pin_net),
        net_names=[net.name for net in d.nets],
        net_type=_i64(net_types),
        net_pin_count=np.diff(_i64(net_ptr)),
        net_ptr=_i64(net_ptr),
        member_kind=_i64(member_kind),
        member_id=_i64(member_id),
        net_driver_kind=_i64(drv_kind),
        net_driver_id=_i64(drv_id),
        net_routes=[net.routed_paths for net in d.nets],
        io_names=[p.name for p in d.pins],
        io_direction=io_dir,
        io_x=iox,
        io_y=ioy,
        io_placed=io_placed,
        io_orientation=io_orient,
        io_layer_id=io_layer,
        io_net=io_net,
        flags=flags,
    )
    return db


def pin_location(p: Union[Pin, IOPin], g: Optional[Gate] = None) -> tuple[int, int]:
    """Location used for a net member: the owning gate's origin, or the IO's own position."""
    if isinstance(p, IOPin):
        if p.x is None:
            raise Unplaced(f"IO {p.name!r} has no placement")
        return p.x, p.y
    if g is None or g.x is None:
        raise Unplaced(f"pin {p.pin_name!r} belongs to an unplaced gate")
    return g.x, g.y


# -- validation ------------------------------------------------------------------------


@dataclass(frozen=True)
class DbIssue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def validate(db: DesignDatabase) -> list[DbIssue]:
    """Check every database invariant; an empty list means the database is consistent."""
    issues: list[DbIssue] = []

    def bad(code: str, message: str) -> None:
        issues.append(DbIssue(code, message))

    G, P, N, I = db.num_gates, db.num_pins, db.num_nets, db.num_ios
    shapes = {
        "gate": (G, [db.gate_cell_type, db.gate_orientation, db.gate_x, db.gate_y, db.gate_placed,
                     db.gate_place_flag, db.gate_area, db.gate_power_leak, db.gate_missing_tech]),
        "pin": (P, [db.pin_owner, db.pin_type, db.pin_cell_type, db.pin_x, db.pin_y, db.pin_net]),
        "net": (N, [db.net_type, db.net_pin_count, db.net_driver_kind, db.net_driver_id]),
        "io": (I, [db.io_direction, db.io_x, db.io_y, db.io_placed, db.io_orientation, db.io_layer_id, db.io_net]),
    }
    for kind, (count, cols) in shapes.items():
        for col in cols:
            if len(col) != count:
                bad("ShapeMismatch", f"{kind} column has {len(col)} rows, expected {count}")
    if len(db.net_routes) != N:
        bad("ShapeMismatch", f"net_routes has {len(db.net_routes)} rows, expected {N}")
    if issues:
        return issues

    for kind, names in (("gate", db.gate_names), ("net", db.net_names), ("io", db.io_names)):
        if len(set(names)) != len(names):
            bad("DuplicateName", f"duplicate {kind} names")

    # gates
    cell_ids = set(db.vocab.cell_type.values())
    for i in np.flatnonzero((db.gate_orientation < 0) | (db.gate_orientation > 7)):
        bad("BadOrientation", f"gate {db.gate_names[i]!r} orientation {db.gate_orientation[i]}")
    for i in np.flatnonzero(~np.isin(db.gate_cell_type, list(cell_ids))):
        bad("UnknownVocab", f"gate {db.gate_names[i]!r} cell_type {db.gate_cell_type[i]} not in vocabulary")
    for i in np.flatnonzero((db.gate_place_flag < 0) | (db.gate_place_flag > 3)):
        bad("UnknownVocab", f"gate {db.gate_names[i]!r} place_flag {db.gate_place_flag[i]}")
    for i in np.flatnonzero((db.gate_place_flag > 0) != db.gate_placed):
        bad("PlacementMismatch", f"gate {db.gate_names[i]!r} place_flag {db.gate_place_flag[i]} vs coordinates")
    for arr, label in ((db.gate_area, "area"), (db.gate_power_leak, "power_leak")):
        for i in np.flatnonzero(~np.isfinite(arr) | (arr < 0)):
            bad("NegativeAttribute", f"gate {db.gate_names[i]!r} {label}={arr[i]}")

    # pins
    owner_ok = (db.pin_owner >= 0) & (db.pin_owner < G)
    for i in np.flatnonzero(~owner_ok):
        bad("DanglingReference", f"pin {i} owner gate {db.pin_owner[i]} does not exist")
    for i in np.flatnonzero((db.pin_type < 0) | (db.pin_type > 2)):
        bad("UnknownVocab", f"pin {i} pin_type {db.pin_type[i]}")
    ok = np.flatnonzero(owner_ok)
    own = db.pin_owner[ok]
    for i in ok[db.pin_cell_type[ok] != db.gate_cell_type[own]]:
        bad("CellTypeMismatch", f"pin {i} cell_type differs from its owner gate")
    placed = db.gate_placed[own]
    geo_bad = placed & ((db.pin_x[ok] != db.gate_x[own]) | (db.pin_y[ok] != db.gate_y[own]))
    for i in ok[geo_bad]:
        bad("PinGeometry", f"pin {i} location differs from its gate origin")

    # nets
    ptr = db.net_ptr
    M = len(db.member_id)
    if len(ptr) != N + 1 or ptr[0] != 0 or ptr[-1] != M or np.any(np.diff(ptr) < 0):
        bad("MemberLayout", "net member offsets are inconsistent")
        return issues
    if len(db.member_kind) != M:
        bad("ShapeMismatch", "member_kind and member_id lengths differ")
        return issues
    for n in np.flatnonzero(db.net_pin_count != np.diff(ptr)):
        bad("PinCountMismatch", f"net {db.net_names[n]!r} pin_count {db.net_pin_count[n]} != {ptr[n + 1] - ptr[n]} members")
    for n in np.flatnonzero((db.net_type < 0) | (db.net_type >= len(NET_TYPES))):
        bad("UnknownVocab", f"net {db.net_names[n]!r} net_type {db.net_type[n]}")
    mk, mid = db.member_kind, db.member_id
    is_pin = mk == KIND_PIN
    is_io = mk == KIND_IO
    for j in np.flatnonzero(~(is_pin | is_io)):
        bad("MemberLayout", f"member {j} has unknown kind {mk[j]}")
    limit = np.where(is_pin, P, I)
    valid = (is_pin | is_io) & (mid >= 0) & (mid < limit)
    member_net = db.member_net_index()
    for j in np.flatnonzero(~valid):
        bad("DanglingReference", f"net {db.net_names[member_net[j]]!r} member {mid[j]} does not exist")
    pin_seen = np.zeros(P, dtype=np.int64)
    pm = valid & is_pin
    np.add.at(pin_seen, mid[pm], 1)
    for p in np.flatnonzero(pin_seen > 1):
        bad("MultiNetPin", f"pin {p} is a member of several nets")
    expected_pin_net = np.full(P, NO_ID, dtype=np.int64)
    expected_pin_net[mid[pm]] = member_net[pm]
    for p in np.flatnonzero(expected_pin_net != db.pin_net):
        bad("NetMembership", f"pin {p} pin_net={db.pin_net[p]} but membership says {expected_pin_net[p]}")
    im = valid & is_io
    expected_io_net = np.full(I, NO_ID, dtype=np.int64)
    expected_io_net[mid[im]] = member_net[im]
    for i in np.flatnonzero(expected_io_net != db.io_net):
        bad("NetMembership", f"io {db.io_names[i]!r} io_net={db.io_net[i]} but membership says {expected_io_net[i]}")
    # drivers: exactly-one-output rule
    drives = np.zeros(M, dtype=bool)
    drives[pm] = db.pin_type[mid[pm]] == PIN_OUTPUT
    drives[im] = db.io_direction[mid[im]] == PIN_INPUT
    n_drivers = np.bincount(member_net[drives], minlength=N) if M else np.zeros(N, dtype=np.int64)
    for n in range(N):
        dk, di = int(db.net_driver_kind[n]), int(db.net_driver_id[n])
        lo, hi = ptr[n], ptr[n + 1]
        if dk == NO_ID:
            if n_drivers[n] == 1:
                bad("DriverMismatch", f"net {db.net_names[n]!r} has one output member but no driver")
            continue
        hit = np.flatnonzero((mk[lo:hi] == dk) & (mid[lo:hi] == di))
        if len(hit) == 0:
            bad("DriverMismatch", f"net {db.net_names[n]!r} driver is not a member")
        elif not drives[lo + hit[0]] or n_drivers[n] != 1:
            bad("DriverMismatch", f"net {db.net_names[n]!r} driver does not drive the net")

    # ios
    for i in np.flatnonzero((db.io_orientation < 0) | (db.io_orientation > 7)):
        bad("BadOrientation", f"io {db.io_names[i]!r} orientation {db.io_orientation[i]}")
    for i in np.flatnonzero((db.io_direction < 0) | (db.io_direction > 2)):
        bad("UnknownVocab", f"io {db.io_names[i]!r} direction {db.io_direction[i]}")
    layer_ids = set(db.vocab.layer_id.values()) | {NO_ID}
    for i in np.flatnonzero(~np.isin(db.io_layer_id, list(layer_ids))):
        bad("UnknownVocab", f"io {db.io_names[i]!r} layer_id {db.io_layer_id[i]} is not a declared layer")
    return issues

"""Stage-aware net supervision: HPWL, routed wire length and via count."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .circuit_db import KIND_IO, KIND_PIN, NET_TYPES, DesignDatabase, Net, pin_location
from .def_parser import RawNet, RoutedPath, Stage
from .errors import StageMismatch

logger = logging.getLogger(__name__)

LABEL_FIELDS = {
    Stage.FLOORPLAN: (),
    Stage.PLACEMENT: ("hpwl",),
    Stage.ROUTING: ("wire_length", "via_count"),
}
SPECIAL_NET_TYPES = (NET_TYPES["power"], NET_TYPES["ground"], NET_TYPES["clock"])


@dataclass(frozen=True)
class NetLabels:
    net: int
    hpwl: int
    wire_length: int
    via_count: int


@dataclass
class LabelSet:
    """Per-net label columns for one design at one stage, indexed by net id."""

    stage: Stage
    hpwl: np.ndarray
    hpwl_valid: np.ndarray
    wire_length: np.ndarray
    via_count: np.ndarray
    mask: np.ndarray
    include_special: bool = False

    def __len__(self) -> int:
        return len(self.hpwl)

    def for_net(self, n: int) -> NetLabels:
        return NetLabels(n, int(self.hpwl[n]), int(self.wire_length[n]), int(self.via_count[n]))

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)


def compute_hpwl(net: Net, db: DesignDatabase) -> int:
    """Half-perimeter of the bounding box over the net's member locations."""
    if not net.members:
        return 0
    xs, ys = [], []
    for kind, idx in net.members:
        if kind == "io":
            x, y = pin_location(db.io(idx))
        else:
            pin = db.pin(idx)
            x, y = pin_location(pin, db.gate(pin.owner_gate))
        xs.append(x)
        ys.append(y)
    return (max(xs) - min(xs)) + (max(ys) - min(ys))


def member_locations(db: DesignDatabase) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """x, y and a located flag for every entry of the member arrays."""
    mk, mid = db.member_kind, db.member_id
    x = np.zeros(len(mid), dtype=np.int64)
    y = np.zeros(len(mid), dtype=np.int64)
    ok = np.zeros(len(mid), dtype=bool)
    pins = mk == KIND_PIN
    if pins.any():
        p = mid[pins]
        x[pins] = db.pin_x[p]
        y[pins] = db.pin_y[p]
        ok[pins] = db.gate_placed[db.pin_owner[p]]
    ios = mk == KIND_IO
    if ios.any():
        i = mid[ios]
        x[ios] = db.io_x[i]
        y[ios] = db.io_y[i]
        ok[ios] = db.io_placed[i]
    return x, y, ok


def net_hpwl(db: DesignDatabase) -> tuple[np.ndarray, np.ndarray]:
    """HPWL of every net plus a flag telling whether all members were located."""
    N = db.num_nets
    hpwl = np.zeros(N, dtype=np.int64)
    valid = np.ones(N, dtype=bool)
    if N == 0 or len(db.member_id) == 0:
        return hpwl, valid
    x, y, ok = member_locations(db)
    starts = db.net_ptr[:-1]
    nonempty = np.flatnonzero(db.net_pin_count > 0)
    s = starts[nonempty]
    hpwl[nonempty] = (
        np.maximum.reduceat(x, s) - np.minimum.reduceat(x, s)
        + np.maximum.reduceat(y, s) - np.minimum.reduceat(y, s)
    )
    missing = np.zeros(N, dtype=np.int64)
    np.add.at(missing, db.member_net_index(), ~ok)
    valid = missing == 0
    hpwl[~valid] = 0
    return hpwl, valid


def _paths(net: Union[RawNet, Iterable[RoutedPath]]) -> Iterable[RoutedPath]:
    return net.routed_paths if isinstance(net, RawNet) else net


def _route_totals(paths: Iterable[RoutedPath]) -> tuple[int, int, int]:
    length = vias = diagonal = 0
    for path in paths:
        pts = path.points
        for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
            dx = abs(x2 - x1)
            dy = abs(y2 - y1)
            if dx and dy:
                diagonal += 1
            length += dx + dy
        vias += len(path.via_names)
    return length, vias, diagonal


def compute_wire_length(net: Union[RawNet, Iterable[RoutedPath]]) -> int:
    """Manhattan length summed over consecutive points of every routed path; vias add nothing."""
    length, _, diagonal = _route_totals(_paths(net))
    if diagonal:
        name = net.name if isinstance(net, RawNet) else "<paths>"
        logger.warning("net %s has %d diagonal segments scored as |dx|+|dy|", name, diagonal)
    return length


def compute_via_count(net: Union[RawNet, Iterable[RoutedPath]]) -> int:
    return sum(len(path.via_names) for path in _paths(net))


def compute_labels(db: DesignDatabase, stage: Union[Stage, str], include_special: bool = False) -> LabelSet:
    """Label columns for all nets of ``db`` at ``stage``.

    Power, ground and clock nets are left out of the supervision mask unless
    ``include_special`` is set. Nets whose members cannot all be located get
    hpwl 0 and are masked out at placement.
    """
    stage = Stage.parse(stage)
    N = db.num_nets
    if stage is Stage.FLOORPLAN:
        hpwl = np.zeros(N, dtype=np.int64)
        valid = np.zeros(N, dtype=bool)
    else:
        hpwl, valid = net_hpwl(db)
        if not valid.all():
            logger.warning("%d nets have unplaced members; hpwl set to 0", int((~valid).sum()))
    wl = np.zeros(N, dtype=np.int64)
    vias = np.zeros(N, dtype=np.int64)
    if stage is Stage.ROUTING:
        diagonal_nets = 0
        for n, paths in enumerate(db.net_routes):
            if paths:
                wl[n], vias[n], diag = _route_totals(paths)
                diagonal_nets += diag > 0
        if diagonal_nets:
            logger.warning("%d nets contain diagonal segments scored as |dx|+|dy|", diagonal_nets)
    special = np.isin(db.net_type, SPECIAL_NET_TYPES)
    mask = np.ones(N, dtype=bool) if include_special else ~special
    if stage is Stage.PLACEMENT:
        mask &= valid
    elif stage is Stage.FLOORPLAN:
        mask[:] = False
    return LabelSet(stage, hpwl, valid, wl, vias, mask, include_special)


def attach_labels(graph, labels: LabelSet, stage: Optional[Union[Stage, str]] = None):
    """Copy net labels onto every table that instantiates nets in ``graph``.

    Tables flagged ``carries_net`` receive one label column per stage label,
    gathered through their net provenance, plus a boolean mask.
    """
    stage = graph.stage if stage is None else Stage.parse(stage)
    if stage.rank > graph.stage.rank:
        raise StageMismatch(f"{stage.value} labels requested on a {graph.stage.value} graph")
    if stage is Stage.FLOORPLAN:
        logger.warning("no supervision is defined at floorplan stage; graph left unlabeled")
        return graph
    if labels.stage.rank < stage.rank:
        raise StageMismatch(f"label set computed for {labels.stage.value}, not {stage.value}")
    names = LABEL_FIELDS[stage]
    for table in graph.tables():
        if not table.carries_net:
            continue
        nets = table.net_ids()
        table.labels = {f"net.{name}": labels.column(name)[nets] for name in names}
        table.label_mask = labels.mask[nets]
    graph.label_stage = stage
    return graph

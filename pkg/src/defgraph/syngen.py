"""Seeded synthetic DEF designs with exactly known labels.

Gates sit on distinct sites of a square grid; each gate output drives a star
net to input pins of other gates. Top-level inputs drive their own nets and
top-level outputs hang off gate nets as extra sinks. At routing stage every
driver-to-sink connection is an explicit L-route: a vertical leg on metal2,
then one via2_3 and a horizontal leg on metal3 when the sink is offset in x.
The ground truth is computed here straight from the generated coordinates and
never goes through the parser or the label code.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .def_parser import Stage
from .errors import InfeasibleSpec

logger = logging.getLogger(__name__)

# cell -> (input pins, output pin, area, leakage)
CELLS = {
    "INV_X1": (("A",), "ZN", 0.532, 14.35),
    "BUF_X1": (("A",), "Z", 0.798, 21.78),
    "NAND2_X1": (("A1", "A2"), "ZN", 0.798, 17.39),
    "NOR2_X1": (("A1", "A2"), "ZN", 0.798, 22.75),
    "AOI21_X1": (("A", "B1", "B2"), "ZN", 1.064, 27.62),
    "NAND4_X1": (("A1", "A2", "A3", "A4"), "ZN", 1.330, 23.46),
}
SITE_X = 380
SITE_Y = 2800
MARGIN = 10 * SITE_X
ORIENTS = ("N", "FS", "FN", "S")


@dataclass
class GenSpec:
    gates: int
    avg_fanout: float = 2.0
    io_count: int = 0
    grid: Optional[int] = None
    seed: int = 0
    stage: str = "routing"
    # vias stacked at each routed net's driver on top of the L-route vias
    via_stack: int = 0


@dataclass
class NetTruth:
    hpwl: Optional[int]
    wire_length: Optional[int]
    via_count: Optional[int]


@dataclass
class GroundTruth:
    design_name: str
    stage: str
    counts: dict[str, int]
    nets: dict[str, NetTruth] = field(default_factory=dict)

    def to_json(self) -> str:
        body = {
            "design_name": self.design_name,
            "stage": self.stage,
            "counts": self.counts,
            "nets": {name: asdict(t) for name, t in self.nets.items()},
        }
        return json.dumps(body, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        body = json.loads(text)
        nets = {name: NetTruth(**t) for name, t in body["nets"].items()}
        return cls(body["design_name"], body["stage"], body["counts"], nets)


def tech_table_text() -> str:
    lines = ["# cell pin direction area leakage"]
    for cell, (inputs, output, area, leak) in CELLS.items():
        for pin in inputs:
            lines.append(f"{cell} {pin} input {area} {leak}")
        lines.append(f"{cell} {output} output {area} {leak}")
    return "\n".join(lines) + "\n"


def _fanouts(rng: np.random.Generator, n: int, avg: float) -> np.ndarray:
    if avg <= 0:
        return np.zeros(n, dtype=np.int64)
    if avg < 1:
        return (rng.random(n) < avg).astype(np.int64)
    return 1 + rng.poisson(avg - 1.0, size=n)


def _route(xd: int, yd: int, xs: int, ys: int) -> tuple[list[str], int, int]:
    """Path texts, wire length and via count of one L-route from driver to sink."""
    dx, dy = xs - xd, ys - yd
    if dx == 0:
        return [f"metal2 ( {xd} {yd} ) ( * {ys} )"], abs(dy), 0
    if dy == 0:
        return [f"metal2 ( {xd} {yd} ) via2_3", f"metal3 ( {xd} {yd} ) ( {xs} * )"], abs(dx), 1
    return [f"metal2 ( {xd} {yd} ) ( * {ys} ) via2_3", f"metal3 ( {xd} {ys} ) ( {xs} * )"], abs(dx) + abs(dy), 1


def generate_design(spec: GenSpec, name: Optional[str] = None) -> tuple[str, GroundTruth]:
    """DEF text and ground truth for ``spec``; a pure function of the spec."""
    stage = Stage.parse(spec.stage)
    G = int(spec.gates)
    if G < 1:
        raise InfeasibleSpec(f"need at least one gate, got {G}")
    if spec.io_count < 0 or spec.via_stack < 0:
        raise InfeasibleSpec("io_count and via_stack must be non-negative")
    side = spec.grid if spec.grid is not None else max(1, math.ceil(math.sqrt(2 * G)))
    if side * side < G:
        raise InfeasibleSpec(f"a {side}x{side} grid cannot host {G} gates")
    rng = np.random.default_rng(spec.seed)
    name = name or f"syn_{G}_s{spec.seed}"
    cell_names = list(CELLS)

    cells = rng.integers(0, len(cell_names), size=G)
    sites = rng.choice(side * side, size=G, replace=False)
    gx = (MARGIN + (sites % side) * SITE_X).tolist()
    gy = (MARGIN + (sites // side) * SITE_Y).tolist()
    orients = rng.integers(0, len(ORIENTS), size=G).tolist()
    width = 2 * MARGIN + side * SITE_X
    height = 2 * MARGIN + side * SITE_Y

    # IOs spread over the four die edges
    n_io = int(spec.io_count)
    n_in = (n_io + 1) // 2
    per_edge = (n_io + 3) // 4
    io_names, io_dirs, io_xy = [], [], []
    for j in range(n_io):
        edge, k = j % 4, j // 4
        tx = (k + 1) * width // (per_edge + 1)
        ty = (k + 1) * height // (per_edge + 1)
        io_xy.append(((tx, 0), (tx, height), (0, ty), (width, ty))[edge])
        if j < n_in:
            io_names.append(f"in_{j}")
            io_dirs.append("INPUT")
        else:
            io_names.append(f"out_{j - n_in}")
            io_dirs.append("OUTPUT")

    # sink pool of gate input pins, consumed in shuffled order
    pool_gate, pool_pin = [], []
    for g in range(G):
        for pin in CELLS[cell_names[cells[g]]][0]:
            pool_gate.append(g)
            pool_pin.append(pin)
    order = rng.permutation(len(pool_gate)).tolist()
    pool = [(pool_gate[i], pool_pin[i]) for i in order]
    pool.reverse()  # pop from the end

    def take(count: int, exclude: int) -> list[tuple[int, str]]:
        got, skipped = [], []
        while len(got) < count and pool:
            item = pool.pop()
            (skipped if item[0] == exclude else got).append(item)
        pool.extend(reversed(skipped))
        return got

    # net: (name, driver, sinks); driver/sink entries are ("g", gate, pin) or ("io", index)
    nets: list[tuple[str, tuple, list[tuple]]] = []
    fanout = _fanouts(rng, G, spec.avg_fanout).tolist()
    gate_net: dict[int, int] = {}
    for g in rng.permutation(G).tolist():
        sinks = take(fanout[g], g)
        if sinks:
            gate_net[g] = len(nets)
            out_pin = CELLS[cell_names[cells[g]]][1]
            nets.append((f"n{g}", ("g", g, out_pin), [("g", s, p) for s, p in sinks]))
    for j in range(n_in):
        sinks = take(max(1, fanout[j % G]), -1)
        if sinks:
            nets.append((f"pi_{j}", ("io", j), [("g", s, p) for s, p in sinks]))
    for j in range(n_in, n_io):
        g = int(rng.integers(0, G))
        if g in gate_net:
            nets[gate_net[g]][2].append(("io", j))
        else:
            gate_net[g] = len(nets)
            out_pin = CELLS[cell_names[cells[g]]][1]
            nets.append((f"n{g}", ("g", g, out_pin), [("io", j)]))
    nets.sort(key=lambda n: n[0])

    placed = stage is not Stage.FLOORPLAN
    routed = stage is Stage.ROUTING

    def loc(member: tuple) -> tuple[int, int]:
        if member[0] == "io":
            return io_xy[member[1]]
        return gx[member[1]], gy[member[1]]

    def conn(member: tuple) -> str:
        return f"( PIN {io_names[member[1]]} )" if member[0] == "io" else f"( g{member[1]} {member[2]} )"

    truth = GroundTruth(name, stage.value, {})
    net_lines = []
    pins = 0
    for net_name, driver, sinks in nets:
        members = [driver, *sinks]
        pins += sum(1 for m in members if m[0] == "g")
        text = f"    - {net_name} " + " ".join(conn(m) for m in members) + " + USE SIGNAL"
        hpwl = wl = vias = None
        if placed:
            xs = [loc(m)[0] for m in members]
            ys = [loc(m)[1] for m in members]
            hpwl = (max(xs) - min(xs)) + (max(ys) - min(ys))
        if routed:
            xd, yd = loc(driver)
            paths, wl, vias = [], 0, 0
            for layer in range(1, spec.via_stack + 1):
                paths.append(f"metal{layer} ( {xd} {yd} ) via{layer}_{layer + 1}")
                vias += 1
            for sink in sinks:
                p, length, v = _route(xd, yd, *loc(sink))
                paths.extend(p)
                wl += length
                vias += v
            text += "\n      + ROUTED " + "\n      NEW ".join(paths)
        net_lines.append(text + " ;")
        truth.nets[net_name] = NetTruth(hpwl, wl, vias)
    truth.counts = {"gates": G, "pins": pins, "nets": len(nets), "ios": n_io}

    out = [
        "VERSION 5.8 ;",
        'DIVIDERCHAR "/" ;',
        'BUSBITCHARS "[]" ;',
        f"DESIGN {name} ;",
        "UNITS DISTANCE MICRONS 2000 ;",
        f"DIEAREA ( 0 0 ) ( {width} {height} ) ;",
        "",
    ]
    for r in range(side):
        out.append(f"ROW ROW_{r} core {MARGIN} {MARGIN + r * SITE_Y} {'N' if r % 2 == 0 else 'FS'} "
                   f"DO {side} BY 1 STEP {SITE_X} 0 ;")
    out.append(f"TRACKS X {SITE_X // 2} DO {width // SITE_X} STEP {SITE_X} LAYER metal1 ;")
    if routed:
        out.append(f"GCELLGRID X 0 DO {width // 4200 + 1} STEP 4200 ;")
    out.append("")
    out.append(f"COMPONENTS {G} ;")
    for g in range(G):
        line = f"    - g{g} {cell_names[cells[g]]}"
        if placed:
            line += f" + PLACED ( {gx[g]} {gy[g]} ) {ORIENTS[orients[g]]}"
        out.append(line + " ;")
    out.append("END COMPONENTS")
    out.append("")
    out.append(f"PINS {n_io} ;")
    io_net = _io_net_lookup(nets)
    for j in range(n_io):
        net_name = io_net.get(j)
        line = f"    - {io_names[j]}"
        if net_name:
            line += f" + NET {net_name}"
        line += f" + DIRECTION {io_dirs[j]} + USE SIGNAL"
        if placed:
            x, y = io_xy[j]
            line += f"\n      + PORT\n        + LAYER metal3 ( -140 -140 ) ( 140 140 )\n        + PLACED ( {x} {y} ) N"
        out.append(line + " ;")
    out.append("END PINS")
    out.append("")
    if routed:
        out.append("SPECIALNETS 2 ;")
        out.append(f"    - VDD ( * VDD ) + USE POWER\n      + ROUTED metal7 2800 + SHAPE STRIPE "
                   f"( 0 {MARGIN} ) ( {width} {MARGIN} ) ;")
        out.append(f"    - VSS ( * VSS ) + USE GROUND\n      + ROUTED metal7 2800 + SHAPE STRIPE "
                   f"( 0 {height - MARGIN} ) ( {width} {height - MARGIN} ) ;")
        out.append("END SPECIALNETS")
        out.append("")
    out.append(f"NETS {len(nets)} ;")
    out.extend(net_lines)
    out.append("END NETS")
    out.append("")
    out.append("END DESIGN")
    return "\n".join(out) + "\n", truth


def _io_net_lookup(nets) -> dict:
    found = {}
    for name, driver, sinks in nets:
        for m in (driver, *sinks):
            if m[0] == "io":
                found[m[1]] = name
    return found


def write_design(spec: GenSpec, def_path: Union[str, Path], name: Optional[str] = None) -> tuple[Path, Path, Path]:
    """Write the DEF plus ``<stem>.truth.json`` and ``<stem>.tech`` next to it."""
    def_path = Path(def_path)
    text, truth = generate_design(spec, name)
    def_path.parent.mkdir(parents=True, exist_ok=True)
    def_path.write_text(text, encoding="utf-8")
    truth_path = def_path.with_suffix(".truth.json")
    truth_path.write_text(truth.to_json(), encoding="utf-8")
    tech_path = def_path.with_suffix(".tech")
    tech_path.write_text(tech_table_text(), encoding="utf-8")
    return def_path, truth_path, tech_path

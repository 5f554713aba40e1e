"""Streaming DEF reader/writer for the subset used by physical-design graph extraction.

The reader works in two layers. A line-oriented lexer turns text into tokens
(dropping comments), and a hand-written recursive descent parser turns the token
stream into a :class:`RawDesign`. ``emit_def`` writes a canonical DEF text that
parses back to a structurally equal design.

Coordinates are kept as integer DBU throughout.
"""

from __future__ import annotations

import io
import logging
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator, NamedTuple, Optional, Union

from .errors import DuplicateName, MalformedToken, MissingUnits, UnexpectedToken

logger = logging.getLogger(__name__)

ORIENTATIONS = ("N", "S", "E", "W", "FN", "FS", "FE", "FW")
PLACE_STATUSES = ("UNPLACED", "PLACED", "FIXED", "COVER")
ROUTE_STATUSES = ("ROUTED", "FIXED", "COVER", "NOSHIELD")
PUNCT = frozenset("();-+*")

# Sections captured verbatim (everything up to ``END <name>``).
OPAQUE_SECTIONS = frozenset(
    {
        "VIAS", "NONDEFAULTRULES", "REGIONS", "BLOCKAGES", "GROUPS", "SCANCHAINS",
        "FILLS", "STYLES", "PROPERTYDEFINITIONS", "PINPROPERTIES", "SLOTS", "BEGINEXT",
    }
)
PRELUDE_STATEMENTS = frozenset({"VERSION", "DIVIDERCHAR", "BUSBITCHARS", "NAMESCASESENSITIVE"})

KEYWORDS = frozenset(
    {
        "VERSION", "DIVIDERCHAR", "BUSBITCHARS", "DESIGN", "END", "UNITS", "DISTANCE",
        "MICRONS", "DIEAREA", "ROW", "TRACKS", "GCELLGRID", "DO", "BY", "STEP", "LAYER",
        "COMPONENTS", "PINS", "NETS", "SPECIALNETS", "PLACED", "FIXED", "COVER",
        "UNPLACED", "ROUTED", "NEW", "NET", "DIRECTION", "USE", "PORT", "SHAPE",
        "SOURCE", "WEIGHT", "PROPERTY", "SPECIAL", "TECHNOLOGY", "SYNTHESIZED",
        "MUSTJOIN", "NOSHIELD", "MASK", "RECT", "VIRTUAL", "STYLE", "TAPER", "TAPERRULE",
        "POLYGON", "INPUT", "OUTPUT", "INOUT", "FEEDTHRU", "SIGNAL", "POWER", "GROUND",
        "CLOCK", "TIEOFF", "ANALOG", "SCAN", "RESET",
    }
    | OPAQUE_SECTIONS
)

_TOKEN_RE = re.compile(r'"[^"]*"|[();]|[^\s();]+')
_INT_RE = re.compile(r"-?\d+\Z")
_I64_MIN, _I64_MAX = -(2**63), 2**63 - 1


class TokenKind(str, Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    INTEGER = "integer"
    PUNCT = "punct"


class DefToken(NamedTuple):
    kind: TokenKind
    text: str
    line: int
    col: int = 0


class Stage(str, Enum):
    FLOORPLAN = "floorplan"
    PLACEMENT = "placement"
    ROUTING = "routing"

    @property
    def rank(self) -> int:
        return _STAGE_RANK[self]

    @classmethod
    def parse(cls, value: Union[str, "Stage"]) -> "Stage":
        if isinstance(value, Stage):
            return value
        key = value.strip().lower()
        aliases = {"place": "placement", "route": "routing", "fp": "floorplan"}
        return cls(aliases.get(key, key))


_STAGE_RANK = {Stage.FLOORPLAN: 0, Stage.PLACEMENT: 1, Stage.ROUTING: 2}


@dataclass(slots=True)
class Diagnostic:
    level: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.level} {self.line}:{self.col} {self.message}"


@dataclass(slots=True)
class RawComponent:
    name: str
    cell_master: str
    place_status: str = "UNPLACED"
    x: Optional[int] = None
    y: Optional[int] = None
    orientation: Optional[str] = None


@dataclass(slots=True)
class RawPin:
    name: str
    net: Optional[str] = None
    direction: Optional[str] = None
    use: Optional[str] = None
    special: bool = False
    port: bool = False
    layer: Optional[str] = None
    layer_rect: Optional[tuple[int, int, int, int]] = None
    place_status: Optional[str] = None
    x: Optional[int] = None
    y: Optional[int] = None
    orientation: Optional[str] = None


@dataclass(slots=True)
class RoutedPath:
    layer: str
    points: list[tuple[int, int]] = field(default_factory=list)
    via_names: list[str] = field(default_factory=list)
    # number of points preceding each via, parallel to via_names
    via_positions: list[int] = field(default_factory=list)
    status: str = "ROUTED"
    width: Optional[int] = None
    shape: Optional[str] = None


@dataclass(slots=True)
class RawNet:
    name: str
    use_class: Optional[str] = None
    connections: list[tuple[str, str]] = field(default_factory=list)
    routed_paths: list[RoutedPath] = field(default_factory=list)


@dataclass
class RawDesign:
    design_name: str = ""
    dbu_per_micron: Optional[int] = None
    die_area: Optional[tuple[int, int, int, int]] = None
    prelude: list[tuple[str, ...]] = field(default_factory=list)
    statements: list[tuple[str, ...]] = field(default_factory=list)
    rows: list[tuple[str, ...]] = field(default_factory=list)
    tracks: list[tuple[str, ...]] = field(default_factory=list)
    gcellgrid: list[tuple[str, ...]] = field(default_factory=list)
    sections: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    components: list[RawComponent] = field(default_factory=list)
    pins: list[RawPin] = field(default_factory=list)
    nets: list[RawNet] = field(default_factory=list)
    special_nets: list[RawNet] = field(default_factory=list)
    declared_counts: dict[str, int] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list, compare=False, repr=False)

    def layer_names(self) -> list[str]:
        """Metal layer names declared anywhere in the design, first-seen order."""
        seen: dict[str, None] = {}
        for rec in self.tracks:
            if "LAYER" in rec:
                for name in rec[rec.index("LAYER") + 1 :]:
                    seen.setdefault(name, None)
        for pin in self.pins:
            if pin.layer:
                seen.setdefault(pin.layer, None)
        for net in (*self.special_nets, *self.nets):
            for path in net.routed_paths:
                seen.setdefault(path.layer, None)
        return list(seen)


# ---------------------------------------------------------------------------
# lexing
# ---------------------------------------------------------------------------

Source = Union[str, bytes, os.PathLike, IO[bytes], IO[str], Iterable[str]]


def _iter_lines(source: Source) -> Iterator[tuple[int, str]]:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    elif isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            yield from _iter_lines(fh)
        return
    for lineno, raw in enumerate(source, 1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise MalformedToken(f"invalid UTF-8 byte run at offset {exc.start}", lineno, exc.start + 1) from None
        yield lineno, raw


def _strip_comment(line: str) -> str:
    stripped = line.lstrip()
    if stripped.startswith("#"):
        return ""
    # inline comment: '#' starting a whitespace-separated word outside quotes
    in_quote = False
    prev = " "
    for pos, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote and prev.isspace():
            return line[:pos]
        prev = ch
    return line


def _lex(source: Source) -> tuple[list[str], list[int]]:
    """Fast path: token texts plus their line numbers, no token objects."""
    texts: list[str] = []
    lines: list[int] = []
    findall = _TOKEN_RE.findall
    for lineno, line in _iter_lines(source):
        if "#" in line:
            line = _strip_comment(line)
        toks = findall(line)
        if toks:
            texts.extend(toks)
            lines.extend([lineno] * len(toks))
    return texts, lines


def _classify(text: str, line: int) -> TokenKind:
    if len(text) == 1 and text in PUNCT:
        return TokenKind.PUNCT
    if text == ";":
        return TokenKind.PUNCT
    if _INT_RE.match(text):
        value = int(text)
        if not _I64_MIN <= value <= _I64_MAX:
            raise MalformedToken(f"integer {text} overflows 64 bits", line)
        return TokenKind.INTEGER
    if text in KEYWORDS:
        return TokenKind.KEYWORD
    return TokenKind.IDENTIFIER


def tokenize_def(source: Source) -> list[DefToken]:
    """Tokenize DEF text, bytes, a path or a file object.

    Input is consumed one line at a time; comment lines are dropped and
    sections the parser does not understand are still tokenized.
    """
    tokens: list[DefToken] = []
    for lineno, line in _iter_lines(source):
        if "#" in line:
            line = _strip_comment(line)
        for m in _TOKEN_RE.finditer(line):
            text = m.group()
            tokens.append(DefToken(_classify(text, lineno), text, lineno, m.start() + 1))
    return tokens


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, texts: list[str], lines: list[int], cols: Optional[list[int]] = None):
        self.t = texts
        self.ln = lines
        self.cols = cols
        self.n = len(texts)
        self.i = 0
        self.d = RawDesign()
        self.first_coord_line: Optional[int] = None

    # -- helpers ----------------------------------------------------------------

    def _pos(self, i: Optional[int] = None) -> tuple[int, int]:
        i = self.i if i is None else i
        if i >= self.n:
            return (self.ln[-1] if self.ln else 0), 0
        return self.ln[i], (self.cols[i] if self.cols else 0)

    def _warn(self, message: str, i: Optional[int] = None) -> None:
        line, col = self._pos(i)
        self.d.diagnostics.append(Diagnostic("WARNING", line, col, message))
        logger.debug("%d:%d %s", line, col, message)

    def _fail(self, expected: str) -> UnexpectedToken:
        got = self.t[self.i] if self.i < self.n else "<EOF>"
        return UnexpectedToken(expected, got, *self._pos())

    def _next(self) -> str:
        if self.i >= self.n:
            raise self._fail("more input")
        tok = self.t[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str) -> None:
        if self.i >= self.n or self.t[self.i] != text:
            raise self._fail(repr(text))
        self.i += 1

    def _int(self) -> int:
        if self.i >= self.n:
            raise self._fail("integer")
        tok = self.t[self.i]
        try:
            value = int(tok)
        except ValueError:
            raise self._fail("integer") from None
        self.i += 1
        return value

    def _statement(self) -> tuple[str, ...]:
        """Collect tokens up to (not including) the next ';' and consume it."""
        t, i, n = self.t, self.i, self.n
        start = i
        while i < n and t[i] != ";":
            i += 1
        if i >= n:
            self.i = start
            raise self._fail("';'")
        self.i = i + 1
        return tuple(t[start:i])

    def _point(self) -> tuple[int, int]:
        if self.first_coord_line is None:
            self.first_coord_line = self.i
        self._expect("(")
        x = self._int()
        y = self._int()
        self._expect(")")
        return x, y

    def _skip_property(self) -> None:
        # Skip an unknown "+ KEY ..." up to the next '+' or ';'.
        t, i, n = self.t, self.i, self.n
        while i < n and t[i] != "+" and t[i] != ";":
            i += 1
        self.i = i

    def _section_header(self, name: str) -> None:
        if self.i < self.n and self.t[self.i] != ";":
            count = self._int()
            self.d.declared_counts[name] = count
        self._expect(";")

    def _end_section(self, name: str, actual: int, start: int) -> None:
        self._expect("END")
        self._expect(name)
        declared = self.d.declared_counts.get(name)
        if declared is not None and declared != actual:
            self._warn(f"{name} declares {declared} entries, found {actual}", start)

    # -- top level --------------------------------------------------------------

    def parse(self) -> RawDesign:
        d = self.d
        t = self.t
        seen_design = False
        while self.i < self.n:
            tok = t[self.i]
            start = self.i
            self.i += 1
            if tok == "DESIGN":
                d.design_name = self._next()
                self._expect(";")
                seen_design = True
            elif tok == "UNITS":
                self._expect("DISTANCE")
                self._expect("MICRONS")
                d.dbu_per_micron = int(self._next())
                if d.dbu_per_micron <= 0:
                    raise UnexpectedToken("positive DBU per micron", str(d.dbu_per_micron), *self._pos(self.i - 1))
                self._expect(";")
            elif tok == "DIEAREA":
                pts = []
                while self.i < self.n and t[self.i] == "(":
                    pts.append(self._point())
                self._expect(";")
                if len(pts) < 2:
                    raise UnexpectedToken("two DIEAREA points", str(len(pts)), *self._pos(start))
                xs = [p[0] for p in pts]
                ys = [p[1] for p in pts]
                if len(pts) > 2:
                    self._warn("polygonal DIEAREA reduced to its bounding box", start)
                d.die_area = (min(xs), min(ys), max(xs), max(ys))
            elif tok == "ROW":
                self.i = start
                d.rows.append(self._statement())
            elif tok == "TRACKS":
                self.i = start
                d.tracks.append(self._statement())
            elif tok == "GCELLGRID":
                self.i = start
                d.gcellgrid.append(self._statement())
            elif tok == "COMPONENTS":
                self._components(start)
            elif tok == "PINS":
                self._pins(start)
            elif tok == "NETS":
                d.nets = self._nets("NETS", start, special=False)
            elif tok == "SPECIALNETS":
                d.special_nets = self._nets("SPECIALNETS", start, special=True)
            elif tok in OPAQUE_SECTIONS:
                self._opaque_section(tok)
            elif tok == "END":
                what = self._next()
                if what == "DESIGN":
                    break
                self._warn(f"stray END {what}", start)
            else:
                self.i = start
                stmt = self._statement()
                if not seen_design and tok in PRELUDE_STATEMENTS:
                    d.prelude.append(stmt)
                else:
                    d.statements.append(stmt)
        if d.dbu_per_micron is None and self.first_coord_line is not None:
            line, col = self._pos(self.first_coord_line)
            raise MissingUnits("coordinates present but UNITS DISTANCE MICRONS is missing", line, col)
        return d

    def _opaque_section(self, name: str) -> None:
        t, i, n = self.t, self.i, self.n
        start = i
        while i < n - 1 and not (t[i] == "END" and t[i + 1] == name):
            i += 1
        if i >= n - 1:
            raise self._fail(f"END {name}")
        self.d.sections.append((name, tuple(t[start:i])))
        self.i = i + 2

    # -- COMPONENTS ---------------------------------------------------------------

    def _components(self, start: int) -> None:
        self._section_header("COMPONENTS")
        t = self.t
        comps = self.d.components
        names: set[str] = set()
        while self.i < self.n and t[self.i] == "-":
            entry = self.i
            self.i += 1
            name = self._next()
            master = self._next()
            comp = RawComponent(name, master)
            while True:
                tok = self._next()
                if tok == ";":
                    break
                if tok != "+":
                    self.i -= 1
                    raise self._fail("'+' or ';'")
                key = self._next()
                if key in ("PLACED", "FIXED", "COVER"):
                    comp.place_status = key
                    comp.x, comp.y = self._point()
                    comp.orientation = self._orientation()
                elif key == "UNPLACED":
                    comp.place_status = key
                else:
                    self._skip_property()
            if name in names:
                raise DuplicateName(f"duplicate component {name!r}", *self._pos(entry))
            names.add(name)
            comps.append(comp)
        self._end_section("COMPONENTS", len(comps), start)

    def _orientation(self) -> str:
        tok = self._next()
        if tok not in ORIENTATIONS:
            self.i -= 1
            raise self._fail("orientation")
        return tok

    # -- PINS -----------------------------------------------------------------------

    def _pins(self, start: int) -> None:
        self._section_header("PINS")
        t = self.t
        pins = self.d.pins
        names: set[str] = set()
        while self.i < self.n and t[self.i] == "-":
            entry = self.i
            self.i += 1
            pin = RawPin(self._next())
            ports = 0
            while True:
                tok = self._next()
                if tok == ";":
                    break
                if tok != "+":
                    self.i -= 1
                    raise self._fail("'+' or ';'")
                key_at = self.i
                key = self._next()
                ignore = ports > 1
                if key == "NET":
                    pin.net = self._next()
                elif key == "SPECIAL":
                    pin.special = True
                elif key == "DIRECTION":
                    pin.direction = self._next()
                elif key == "USE":
                    pin.use = self._next()
                elif key == "PORT":
                    ports += 1
                    pin.port = True
                    if ports == 2:
                        self._warn(f"pin {pin.name!r} has several PORTs; using the first", key_at)
                elif key == "LAYER":
                    layer = self._next()
                    while self.i < self.n and t[self.i] != "(":
                        self.i += 1  # MASK n / SPACING d / DESIGNRULEWIDTH d
                    x0, y0 = self._point()
                    x1, y1 = self._point()
                    if not ignore and pin.layer is None:
                        pin.layer = layer
                        pin.layer_rect = (x0, y0, x1, y1)
                elif key in ("PLACED", "FIXED", "COVER"):
                    xy = self._point()
                    orient = self._orientation()
                    if not ignore and pin.place_status is None:
                        pin.place_status = key
                        pin.x, pin.y = xy
                        pin.orientation = orient
                else:
                    self._skip_property()
            if pin.name in names:
                raise DuplicateName(f"duplicate pin {pin.name!r}", *self._pos(entry))
            names.add(pin.name)
            pins.append(pin)
        self._end_section("PINS", len(pins), start)

    # -- NETS / SPECIALNETS -------------------------------------------------------

    def _nets(self, section: str, start: int, special: bool) -> list[RawNet]:
        self._section_header(section)
        t = self.t
        nets: list[RawNet] = []
        names: set[str] = set()
        while self.i < self.n and t[self.i] == "-":
            entry = self.i
            self.i += 1
            net = RawNet(self._next())
            conns = net.connections
            while True:
                tok = self._next()
                if tok == "(":
                    owner = self._next()
                    pin = self._next()
                    while self._next() != ")":
                        pass  # + SYNTHESIZED
                    conns.append((owner, pin))
                elif tok == "MUSTJOIN":
                    while self._next() != ")":
                        pass
                elif tok == ";":
                    break
                elif tok == "+":
                    key = self._next()
                    if key == "USE":
                        net.use_class = self._next()
                    elif key in ROUTE_STATUSES:
                        self._wiring(net, key, special)
                    else:
                        self._skip_property()
                else:
                    self.i -= 1
                    raise self._fail("connection, '+' or ';'")
            if net.name in names:
                raise DuplicateName(f"duplicate net {net.name!r}", *self._pos(entry))
            names.add(net.name)
            nets.append(net)
        self._end_section(section, len(nets), start)
        return nets

    def _wiring(self, net: RawNet, status: str, special: bool) -> None:
        t = self.t
        n = self.n
        paths = net.routed_paths
        path = self._new_path(status, special)
        paths.append(path)
        pts = path.points
        while self.i < n:
            tok = t[self.i]
            if tok == "(":
                self.i += 1
                xs = self._next()
                ys = self._next()
                try:
                    if xs == "*" or ys == "*":
                        if not pts:
                            raise UnexpectedToken("absolute point before '*'", "*", *self._pos(self.i - 1))
                        px, py = pts[-1]
                        x = px if xs == "*" else int(xs)
                        y = py if ys == "*" else int(ys)
                    else:
                        x = int(xs)
                        y = int(ys)
                except ValueError:
                    self.i -= 2
                    raise self._fail("coordinate") from None
                if self.first_coord_line is None:
                    self.first_coord_line = self.i - 1
                if t[self.i] != ")":
                    self.i += 1  # extension value
                self._expect(")")
                pts.append((x, y))
            elif tok == "NEW":
                self.i += 1
                path = self._new_path(status, special)
                paths.append(path)
                pts = path.points
            elif tok == ";":
                return
            elif tok == "+":
                key = t[self.i + 1]
                if key == "SHAPE":
                    path.shape = t[self.i + 2]
                    self.i += 3
                elif key in ("STYLE", "MASK"):
                    self.i += 3
                else:
                    return
            elif tok in ("MASK", "STYLE", "TAPERRULE"):
                self.i += 2
            elif tok == "TAPER":
                self.i += 1
            elif tok == "RECT":
                self.i += 7
            elif tok == "VIRTUAL":
                self.i += 5
            elif tok == "DO":
                self.i += 7  # via array: DO n BY m STEP dx dy
            else:
                path.via_names.append(tok)
                path.via_positions.append(len(pts))
                self.i += 1
                if self.i < n and t[self.i] in ORIENTATIONS and t[self.i] not in ("N", "S", "E", "W"):
                    self.i += 1

    def _new_path(self, status: str, special: bool) -> RoutedPath:
        layer = self._next()
        path = RoutedPath(layer, status=status)
        if special and self.i < self.n and _INT_RE.match(self.t[self.i]):
            path.width = int(self.t[self.i])
            self.i += 1
        return path


def parse_def(tokens: Union[list[DefToken], Source]) -> RawDesign:
    """Parse a token list from :func:`tokenize_def` (or raw DEF input) into a RawDesign."""
    if isinstance(tokens, list) and (not tokens or isinstance(tokens[0], DefToken)):
        texts = [tok.text for tok in tokens]
        lines = [tok.line for tok in tokens]
        cols = [tok.col for tok in tokens]
        return _Parser(texts, lines, cols).parse()
    texts, lines = _lex(tokens)
    return _Parser(texts, lines).parse()


def read_def(path: Union[str, os.PathLike]) -> RawDesign:
    """Parse a DEF file from disk using the fast lexer."""
    with open(path, "rb") as fh:
        texts, lines = _lex(fh)
    return _Parser(texts, lines).parse()


def parse_def_text(text: Union[str, bytes]) -> RawDesign:
    texts, lines = _lex(text)
    return _Parser(texts, lines).parse()


# ---------------------------------------------------------------------------
# stage detection
# ---------------------------------------------------------------------------

_NON_SIGNAL_USES = frozenset({"POWER", "GROUND"})


def detect_stage(d: RawDesign) -> Stage:
    for net in d.nets:
        if net.routed_paths and (net.use_class or "SIGNAL").upper() not in _NON_SIGNAL_USES:
            return Stage.ROUTING
    for comp in d.components:
        if comp.place_status in ("PLACED", "FIXED"):
            return Stage.PLACEMENT
    return Stage.FLOORPLAN


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _fmt_stmt(tokens: tuple[str, ...]) -> str:
    return " ".join(tokens) + " ;\n"


def _fmt_path(path: RoutedPath) -> str:
    parts = [path.layer]
    if path.width is not None:
        parts.append(str(path.width))
    if path.shape is not None:
        parts.append(f"+ SHAPE {path.shape}")
    vias = list(zip(path.via_positions, path.via_names))
    v = 0
    for k, (x, y) in enumerate(path.points):
        while v < len(vias) and vias[v][0] <= k:
            parts.append(vias[v][1])
            v += 1
        parts.append(f"( {x} {y} )")
    for _, name in vias[v:]:
        parts.append(name)
    return " ".join(parts)


def _emit_net(net: RawNet, out: list[str]) -> None:
    head = [f"- {net.name}"]
    head.extend(f"( {owner} {pin} )" for owner, pin in net.connections)
    if net.use_class is not None:
        head.append(f"+ USE {net.use_class}")
    out.append("    " + " ".join(head))
    status = None
    for path in net.routed_paths:
        if path.status != status:
            out.append(f"\n      + {path.status} {_fmt_path(path)}")
            status = path.status
        else:
            out.append(f"\n      NEW {_fmt_path(path)}")
    out.append(" ;\n")


def emit_def(d: RawDesign) -> bytes:
    """Write ``d`` as canonical DEF text (one statement per entry)."""
    out: list[str] = []
    for stmt in d.prelude:
        out.append(_fmt_stmt(stmt))
    if d.design_name:
        out.append(f"DESIGN {d.design_name} ;\n")
    if d.dbu_per_micron is not None:
        out.append(f"UNITS DISTANCE MICRONS {d.dbu_per_micron} ;\n")
    if d.die_area is not None:
        x0, y0, x1, y1 = d.die_area
        out.append(f"DIEAREA ( {x0} {y0} ) ( {x1} {y1} ) ;\n")
    for stmt in d.statements:
        out.append(_fmt_stmt(stmt))
    for rec in (*d.rows, *d.tracks, *d.gcellgrid):
        out.append(_fmt_stmt(rec))
    for name, body in d.sections:
        out.append(name)
        for tok in body:
            out.append(" " + tok)
            if tok == ";":
                out.append("\n")
        out.append(f"\nEND {name}\n")

    def header(section: str, actual: int) -> bool:
        if section not in d.declared_counts and actual == 0:
            return False
        if section in d.declared_counts:
            out.append(f"{section} {d.declared_counts[section]} ;\n")
        else:
            out.append(f"{section} ;\n")
        return True

    if header("COMPONENTS", len(d.components)):
        for c in d.components:
            line = f"    - {c.name} {c.cell_master}"
            if c.place_status == "UNPLACED":
                line += " + UNPLACED"
            elif c.x is not None:
                line += f" + {c.place_status} ( {c.x} {c.y} ) {c.orientation}"
            out.append(line + " ;\n")
        out.append("END COMPONENTS\n")
    if header("PINS", len(d.pins)):
        for p in d.pins:
            parts = [f"    - {p.name}"]
            if p.net is not None:
                parts.append(f"+ NET {p.net}")
            if p.special:
                parts.append("+ SPECIAL")
            if p.direction is not None:
                parts.append(f"+ DIRECTION {p.direction}")
            if p.use is not None:
                parts.append(f"+ USE {p.use}")
            if p.port:
                parts.append("+ PORT")
            if p.layer is not None:
                x0, y0, x1, y1 = p.layer_rect
                parts.append(f"+ LAYER {p.layer} ( {x0} {y0} ) ( {x1} {y1} )")
            if p.place_status is not None:
                parts.append(f"+ {p.place_status} ( {p.x} {p.y} ) {p.orientation}")
            out.append(" ".join(parts) + " ;\n")
        out.append("END PINS\n")
    if header("SPECIALNETS", len(d.special_nets)):
        for net in d.special_nets:
            _emit_net(net, out)
        out.append("END SPECIALNETS\n")
    if header("NETS", len(d.nets)):
        for net in d.nets:
            _emit_net(net, out)
        out.append("END NETS\n")
    out.append("END DESIGN\n")
    return "".join(out).encode("utf-8")

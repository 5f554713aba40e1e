import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, synth
from defgraph.def_parser import (
    RawDesign,
    RawNet,
    RoutedPath,
    Stage,
    TokenKind,
    detect_stage,
    emit_def,
    parse_def,
    read_def,
    tokenize_def,
)
from defgraph.errors import DuplicateName, MalformedToken, MissingUnits, UnexpectedToken

HEADER = "DESIGN t ;\nUNITS DISTANCE MICRONS 1000 ;\n"


# -- tokenizer ---------------------------------------------------------------------


def test_diearea_tokenizes_to_ten_tokens():
    toks = tokenize_def("DIEAREA ( 0 0 ) ( 434390 434390 ) ;")
    assert len(toks) == 10
    assert toks[-1].text == ";"
    assert [t.text for t in toks[:3]] == ["DIEAREA", "(", "0"]
    assert toks[2].kind is TokenKind.INTEGER


def test_empty_input_has_no_tokens():
    assert tokenize_def("") == []


def test_comment_line_dropped():
    toks = tokenize_def("# comment\nEND DESIGN")
    assert [t.text for t in toks] == ["END", "DESIGN"]
    assert [t.line for t in toks] == [2, 2]


def test_inline_comment_dropped():
    assert [t.text for t in tokenize_def("END DESIGN # trailing")] == ["END", "DESIGN"]


def test_non_utf8_bytes_raise_with_line():
    with pytest.raises(MalformedToken) as exc:
        tokenize_def(b"DESIGN a ;\nCOMPONENTS \xff\xfe ;\n")
    assert exc.value.line == 2


def test_unknown_sections_tokenized_not_rejected():
    toks = tokenize_def("BLOCKAGES 1 ;\n - LAYER metal1 RECT ( 0 0 ) ( 1 1 ) ;\nEND BLOCKAGES")
    assert toks[0].text == "BLOCKAGES"


def test_punctuation_kinds():
    kinds = {t.text: t.kind for t in tokenize_def("- a + B ( * 1 ) ;")}
    for p in "-+(*);":
        assert kinds[p] is TokenKind.PUNCT
    assert kinds["1"] is TokenKind.INTEGER


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=-(2**63), max_value=2**63 - 1), min_size=1, max_size=20),
       st.lists(st.integers(min_value=0, max_value=3), min_size=1, max_size=20))
def test_integers_lossless_and_lines_nondecreasing(values, gaps):
    lines = []
    for i, v in enumerate(values):
        lines.append(" ".join([str(v)] * 1) + "\n" * (1 + gaps[i % len(gaps)]))
    toks = tokenize_def("".join(lines))
    assert [int(t.text) for t in toks] == values
    assert all(t.kind is TokenKind.INTEGER for t in toks)
    assert all(a.line <= b.line for a, b in zip(toks, toks[1:]))
    assert np.array([int(t.text) for t in toks], dtype=np.int64).tolist() == values


# -- parser on the Listing-1 fragment ----------------------------------------------------


def test_listing1_header_and_component(listing1_text):
    d = parse_def(tokenize_def(listing1_text))
    assert d.design_name == "ac97_top"
    assert d.dbu_per_micron == 2000
    assert d.die_area == (0, 0, 434390, 434390)
    comp = next(c for c in d.components if c.name == "_10221_")
    assert (comp.cell_master, comp.place_status, comp.x, comp.y, comp.orientation) == (
        "CLKBUF_X2", "PLACED", 169860, 109200, "FN")


def test_listing1_io_pin(listing1_text):
    d = parse_def(listing1_text)
    (pin,) = d.pins
    assert pin.name == "ac97_reset_pad_o_"
    assert (pin.layer, pin.x, pin.y, pin.orientation) == ("metal6", 127870, 140, "N")
    assert pin.direction == "OUTPUT"
    assert pin.layer_rect == (-140, -140, 140, 140)


def test_listing1_routed_paths(listing1_text):
    d = parse_def(listing1_text)
    (net,) = d.nets
    assert net.name == "_00000_"
    assert net.use_class == "SIGNAL"
    assert net.connections == [("u10.dout[0]$_DFF_P_", "D"), ("_11175_", "ZN")]
    paths = [(p.layer, p.points, p.via_names) for p in net.routed_paths]
    assert paths == [
        ("metal2", [(91770, 88060), (91770, 96600)], []),
        ("metal2", [(91770, 96600), (92150, 96600)], []),
        ("metal1", [(91770, 88060)], ["via1_4"]),
    ]


def test_listing1_special_net_and_opaque_records(listing1_text):
    d = parse_def(listing1_text)
    (vdd,) = d.special_nets
    assert vdd.name == "VDD" and vdd.use_class == "POWER"
    assert vdd.routed_paths[0].width == 2800
    assert vdd.routed_paths[0].shape == "STRIPE"
    assert d.rows and d.tracks and d.gcellgrid


def test_listing1_count_mismatch_is_warning(listing1_text):
    d = parse_def(listing1_text)
    assert d.declared_counts["NETS"] == 12959
    assert d.declared_counts["COMPONENTS"] == 11178
    warned = [x for x in d.diagnostics if x.level == "WARNING" and "declares" in x.message]
    assert len(warned) == 4


def test_listing1_stage_is_routing(listing1_text):
    assert detect_stage(parse_def(listing1_text)) is Stage.ROUTING


def test_read_def_from_path():
    d = read_def(FIXTURES / "listing1.def")
    assert d.design_name == "ac97_top"


# -- grammar cases -----------------------------------------------------------------------


def test_empty_design_no_error():
    d = parse_def("DESIGN e ;\nUNITS DISTANCE MICRONS 100 ;\nCOMPONENTS 0 ;\nEND COMPONENTS\n"
                  "NETS 0 ;\nEND NETS\nEND DESIGN\n")
    assert d.components == [] and d.nets == [] and d.pins == []


def test_wildcards_copy_previous_coordinate():
    d = parse_def(HEADER + "NETS 1 ;\n - n ( a Z ) ( b A )\n + ROUTED metal2 ( 10 20 ) ( * 50 ) ( 70 * ) ;\n"
                  "END NETS\nEND DESIGN\n")
    assert d.nets[0].routed_paths[0].points == [(10, 20), (10, 50), (70, 50)]


def test_missing_units_when_coordinates_present():
    with pytest.raises(MissingUnits):
        parse_def("DESIGN t ;\nDIEAREA ( 0 0 ) ( 10 10 ) ;\nEND DESIGN\n")


def test_no_units_needed_without_coordinates():
    d = parse_def("DESIGN t ;\nCOMPONENTS 1 ;\n - a INV ;\nEND COMPONENTS\nEND DESIGN\n")
    assert d.components[0].x is None


def test_duplicate_component_name():
    with pytest.raises(DuplicateName):
        parse_def(HEADER + "COMPONENTS 2 ;\n - a INV ;\n - a BUF ;\nEND COMPONENTS\nEND DESIGN\n")


def test_duplicate_net_name():
    with pytest.raises(DuplicateName):
        parse_def(HEADER + "NETS 2 ;\n - n ( a Z ) ;\n - n ( b Z ) ;\nEND NETS\nEND DESIGN\n")


def test_unexpected_token_reports_line():
    with pytest.raises(UnexpectedToken) as exc:
        parse_def(HEADER + "COMPONENTS 1 ;\n - a INV + PLACED ( 1 x ) N ;\nEND COMPONENTS\nEND DESIGN\n")
    assert exc.value.line == 4


def test_unknown_plus_property_skipped():
    d = parse_def(HEADER + "COMPONENTS 1 ;\n - a INV + SOURCE NETLIST + WEIGHT 3 + PLACED ( 1 2 ) S ;\n"
                  "END COMPONENTS\nEND DESIGN\n")
    assert (d.components[0].x, d.components[0].y, d.components[0].orientation) == (1, 2, "S")


def test_multiple_ports_keep_first_with_warning():
    d = parse_def(HEADER + "PINS 1 ;\n - p + NET p + DIRECTION INPUT\n"
                  "  + PORT + LAYER metal2 ( 0 0 ) ( 1 1 ) + PLACED ( 5 6 ) N\n"
                  "  + PORT + LAYER metal3 ( 0 0 ) ( 1 1 ) + PLACED ( 7 8 ) N ;\nEND PINS\nEND DESIGN\n")
    assert (d.pins[0].layer, d.pins[0].x, d.pins[0].y) == ("metal2", 5, 6)
    assert any("PORT" in x.message for x in d.diagnostics)


# -- stage detection ------------------------------------------------------------------


def test_stage_placement_without_routes():
    d = parse_def(HEADER + "COMPONENTS 1 ;\n - a INV + PLACED ( 1 2 ) N ;\nEND COMPONENTS\nEND DESIGN\n")
    assert detect_stage(d) is Stage.PLACEMENT


def test_stage_fixed_counts_as_placed():
    d = parse_def(HEADER + "COMPONENTS 1 ;\n - a INV + FIXED ( 1 2 ) N ;\nEND COMPONENTS\nEND DESIGN\n")
    assert detect_stage(d) is Stage.PLACEMENT


def test_stage_floorplan_with_rows_tracks_and_power_grid():
    d = parse_def(HEADER + "ROW r0 core 0 0 N DO 10 BY 1 STEP 380 0 ;\n"
                  "TRACKS X 190 DO 10 STEP 380 LAYER metal1 ;\n"
                  "SPECIALNETS 1 ;\n - VDD ( * VDD ) + USE POWER\n"
                  "   + ROUTED metal7 2800 + SHAPE STRIPE ( 0 10 ) ( 100 10 ) ;\nEND SPECIALNETS\n"
                  "COMPONENTS 1 ;\n - a INV ;\nEND COMPONENTS\nEND DESIGN\n")
    assert detect_stage(d) is Stage.FLOORPLAN


def test_stage_power_net_routes_in_nets_do_not_count():
    d = parse_def(HEADER + "NETS 1 ;\n - VDD ( a VDD ) + USE POWER + ROUTED metal1 ( 0 0 ) ( 5 * ) ;\n"
                  "END NETS\nEND DESIGN\n")
    assert detect_stage(d) is Stage.FLOORPLAN


def test_stage_parse_aliases():
    assert Stage.parse("place") is Stage.PLACEMENT
    assert Stage.parse("route") is Stage.ROUTING
    assert Stage.ROUTING.rank > Stage.PLACEMENT.rank > Stage.FLOORPLAN.rank


# -- emit and roundtrip ------------------------------------------------------------------


def test_listing1_roundtrip(listing1_text):
    d = parse_def(listing1_text)
    text = emit_def(d)
    d2 = parse_def(text)
    assert d2 == d
    assert emit_def(d2) == text


def test_empty_design_skeleton():
    text = emit_def(RawDesign(design_name="x"))
    assert text.split() == [b"DESIGN", b"x", b";", b"END", b"DESIGN"]
    assert parse_def(text) == RawDesign(design_name="x")


@pytest.mark.parametrize("stage", ["floorplan", "placement", "routing"])
@pytest.mark.parametrize("seed", range(4))
def test_synthetic_roundtrip_idempotent(stage, seed):
    text, _, _ = synth(40, seed, stage=stage, via_stack=seed % 2)
    d = parse_def(text)
    once = emit_def(d)
    assert parse_def(once) == d
    assert emit_def(parse_def(once)) == once


_coord = st.integers(min_value=-10**6, max_value=10**6)


@st.composite
def raw_nets(draw):
    nets = []
    for i in range(draw(st.integers(0, 4))):
        paths = []
        for _ in range(draw(st.integers(0, 3))):
            pts = [(draw(_coord), draw(_coord))]
            for _ in range(draw(st.integers(0, 3))):
                x, y = pts[-1]
                if draw(st.booleans()):
                    pts.append((draw(_coord), y))
                else:
                    pts.append((x, draw(_coord)))
            vias = draw(st.lists(st.sampled_from(["via1_2", "via2_3", "VIA34"]), max_size=1))
            paths.append(RoutedPath(f"metal{draw(st.integers(1, 6))}", pts, vias,
                                    [len(pts)] * len(vias)))
        conns = [(f"g{j}", draw(st.sampled_from(["A", "Z", "ZN"]))) for j in range(draw(st.integers(0, 3)))]
        nets.append(RawNet(f"n{i}", draw(st.sampled_from([None, "SIGNAL", "CLOCK"])), conns, paths))
    return nets


@settings(max_examples=100, deadline=None)
@given(raw_nets())
def test_roundtrip_random_nets(nets):
    d = RawDesign(design_name="r", dbu_per_micron=1000, nets=nets, declared_counts={"NETS": len(nets)})
    d2 = parse_def(emit_def(d))
    assert d2 == d
    for net in d2.nets:
        for path in net.routed_paths:
            for (x1, y1), (x2, y2) in zip(path.points, path.points[1:]):
                assert x1 == x2 or y1 == y2

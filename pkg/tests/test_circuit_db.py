import copy

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, synth, toy_db
from defgraph.circuit_db import (
    KIND_IO,
    KIND_PIN,
    NET_TYPES,
    PIN_INOUT,
    PIN_INPUT,
    PIN_OUTPUT,
    TechTable,
    Vocabularies,
    classify_net,
    pin_location,
    resolve,
    validate,
)
from defgraph.def_parser import parse_def, read_def
from defgraph.errors import DanglingReference, MultiNetPin, Unplaced

HEADER = "DESIGN t ;\nUNITS DISTANCE MICRONS 1000 ;\n"


def listing_db():
    tech = TechTable.load(FIXTURES / "listing1.tech")
    return resolve(read_def(FIXTURES / "listing1_completed.def"), tech=tech)


# -- resolution ----------------------------------------------------------------------


def test_listing_net_driver_from_tech_table():
    db = listing_db()
    n = db.net_names.index("_00000_")
    net = db.net(n)
    assert net.pin_count == 2
    kind, pid = net.driver
    assert kind == "pin"
    assert db.pin_names[pid] == "ZN"
    assert db.gate_names[db.pin_owner[pid]] == "_11175_"


def test_listing_orientation_code():
    db = listing_db()
    g = db.gate(db.gate_names.index("_10221_"))
    assert g.orientation == 4
    assert (g.x, g.y) == (169860, 109200)


def test_listing_validates_clean():
    assert validate(listing_db()) == []


def test_listing_fragment_has_dangling_reference():
    with pytest.raises(DanglingReference) as exc:
        resolve(read_def(FIXTURES / "listing1.def"))
    assert exc.value.owner == "u10.dout[0]$_DFF_P_"


def test_empty_design():
    db = resolve(parse_def("DESIGN e ;\nEND DESIGN\n"))
    assert db.counts() == {"gates": 0, "pins": 0, "nets": 0, "ios": 0}
    assert validate(db) == []


def test_io_layer_and_location():
    db = listing_db()
    io = db.io(0)
    assert io.name == "ac97_reset_pad_o_"
    assert db.vocab.layer_id["metal6"] == 6
    assert io.layer_id == 6
    assert pin_location(io) == (127870, 140)


def test_pin_location_is_gate_origin():
    db = listing_db()
    g = db.gate_names.index("_11175_")
    p = int(np.flatnonzero(db.pin_owner == g)[0])
    assert pin_location(db.pin(p), db.gate(g)) == (91770, 88060)


def test_pin_location_unplaced():
    db = resolve(parse_def(HEADER + "COMPONENTS 2 ;\n - a INV ;\n - b INV ;\nEND COMPONENTS\n"
                           "NETS 1 ;\n - n ( a ZN ) ( b A ) ;\nEND NETS\nEND DESIGN\n"))
    with pytest.raises(Unplaced):
        pin_location(db.pin(0), db.gate(0))


def test_unknown_component_in_net():
    with pytest.raises(DanglingReference):
        resolve(parse_def(HEADER + "NETS 1 ;\n - n ( ghost Z ) ;\nEND NETS\nEND DESIGN\n"))


def test_unknown_io_in_net():
    with pytest.raises(DanglingReference):
        resolve(parse_def(HEADER + "NETS 1 ;\n - n ( PIN ghost ) ;\nEND NETS\nEND DESIGN\n"))


def test_pin_in_two_nets():
    src = (HEADER + "COMPONENTS 2 ;\n - a INV ;\n - b INV ;\nEND COMPONENTS\n"
           "NETS 2 ;\n - n1 ( a ZN ) ( b A ) ;\n - n2 ( a ZN ) ;\nEND NETS\nEND DESIGN\n")
    with pytest.raises(MultiNetPin):
        resolve(parse_def(src))


def test_missing_direction_becomes_inout_and_missing_tech_flagged():
    db = resolve(parse_def(HEADER + "COMPONENTS 2 ;\n - a INV ;\n - b INV ;\nEND COMPONENTS\n"
                           "NETS 1 ;\n - n ( a ZN ) ( b A ) ;\nEND NETS\nEND DESIGN\n"))
    assert set(db.pin_type.tolist()) == {PIN_INOUT}
    assert db.flags["unknown_direction"] == 2
    assert db.net(0).driver is None
    assert db.gate_missing_tech.all() and (db.gate_area == 0).all()


def test_tech_area_and_leakage():
    db = toy_db()
    assert db.gate_area.tolist() == [1.0, 1.0]
    assert db.gate_power_leak.tolist() == [0.5, 0.5]
    assert not db.gate_missing_tech.any()


def test_two_outputs_no_driver():
    tech = TechTable.parse("BUF A input\nBUF Z output\n")
    db = resolve(parse_def(HEADER + "COMPONENTS 2 ;\n - a BUF ;\n - b BUF ;\nEND COMPONENTS\n"
                           "NETS 1 ;\n - n ( a Z ) ( b Z ) ;\nEND NETS\nEND DESIGN\n"), tech=tech)
    assert db.net(0).driver is None
    assert validate(db) == []


def test_input_io_drives_net():
    tech = TechTable.parse("BUF A input\nBUF Z output\n")
    db = resolve(parse_def(HEADER + "COMPONENTS 1 ;\n - a BUF ;\nEND COMPONENTS\n"
                           "PINS 1 ;\n - pi + NET n + DIRECTION INPUT ;\nEND PINS\n"
                           "NETS 1 ;\n - n ( PIN pi ) ( a A ) ;\nEND NETS\nEND DESIGN\n"), tech=tech)
    assert db.net(0).driver == ("io", 0)


def test_wildcard_owner_skipped():
    db = resolve(parse_def(HEADER + "NETS 1 ;\n - VDD ( * VDD ) + USE POWER ;\nEND NETS\nEND DESIGN\n"))
    assert db.net(0).pin_count == 0
    assert db.flags["wildcard_connections"] == 1


def test_incidence_sum_matches_raw():
    text, _, db = synth(120, 5)
    raw = parse_def(text)
    incidences = sum(len(n.connections) for n in raw.nets)
    assert int(db.net_pin_count.sum()) == incidences


def test_vocabulary_stability():
    text, _, _ = synth(60, 2)
    raw = parse_def(text)
    v1, v2 = Vocabularies(), Vocabularies()
    a = resolve(raw, v1)
    b = resolve(raw, v2)
    assert v1.to_tsv() == v2.to_tsv()
    assert np.array_equal(a.gate_cell_type, b.gate_cell_type)
    # a second resolve with the grown vocab does not add entries
    before = v1.to_tsv()
    resolve(raw, v1)
    assert v1.to_tsv() == before


def test_cell_ids_dense_first_seen():
    db = listing_db()
    assert db.vocab.cell_type == {"CLKBUF_X2": 0, "INV_X1": 1, "DFF_P_X1": 2, "OAI21_X1": 3}


def test_vocab_tsv_roundtrip_and_digest(tmp_path):
    db = listing_db()
    path = tmp_path / "vocab.tsv"
    db.vocab.save(path)
    loaded = Vocabularies.load(path)
    assert loaded == db.vocab
    assert loaded.digest() == db.vocab.digest()
    lines = path.read_text().splitlines()
    assert all(len(line.split("\t")) == 3 for line in lines)
    assert "orientation\tFN\t4" in lines


def test_layer_without_number_gets_next_free_id():
    v = Vocabularies()
    assert v.layer("metal2") == 2
    assert v.layer("poly") == 3
    assert v.layer("metal3") == 4  # 3 already taken
    assert v.layer("metal2") == 2


def test_tech_table_parse_errors():
    with pytest.raises(ValueError):
        TechTable.parse("BUF A sideways\n")
    with pytest.raises(ValueError):
        TechTable.parse("BUF\n")
    t = TechTable.parse("# comment only\nBUF A input 1.5 # trailing\n")
    assert t.cell_area["BUF"] == 1.5 and "BUF" not in t.cell_leakage


# -- net classification ------------------------------------------------------------------


@pytest.mark.parametrize("name,use,expected", [
    ("VDD", "POWER", "power"),
    ("VSS", "GROUND", "ground"),
    ("_00000_", "SIGNAL", "signal"),
    ("sys_rst_n", None, "reset"),
    ("core_reset", None, "reset"),
    ("scan_en", None, "scan"),
    ("u1_se", None, "scan"),
    ("si", None, "scan"),
    ("sense_amp", None, "signal"),
    ("clk_core", None, "clock"),
    ("CLOCK", None, "clock"),
    ("n123", None, "signal"),
    ("clk", "SIGNAL", "signal"),
    ("data", "CLOCK", "clock"),
])
def test_classify_net(name, use, expected):
    assert classify_net(name, use) == NET_TYPES[expected]


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=20), st.sampled_from([None, "SIGNAL", "POWER", "GROUND", "CLOCK", "ANALOG"]))
def test_classify_net_total_and_deterministic(name, use):
    a = classify_net(name, use)
    assert a == classify_net(name, use)
    assert a in NET_TYPES.values()


# -- validation and mutation fuzzing -------------------------------------------------------


def test_deleted_gate_gives_one_dangling_reference():
    db = toy_db()
    victim = int(db.pin_owner[db.member_id[0]])
    db.pin_owner = db.pin_owner.copy()
    db.pin_owner[db.pin_owner == victim] = db.num_gates  # gate no longer exists
    issues = validate(db)
    codes = [i.code for i in issues]
    assert codes.count("DanglingReference") == 2  # the deleted gate owned two pins
    db2 = toy_db()
    db2.member_id = db2.member_id.copy()
    db2.member_id[0] = db2.num_pins + 5
    assert [i.code for i in validate(db2)].count("DanglingReference") == 1


def _set(arr, idx, value):
    arr = np.array(arr, copy=True)
    arr[idx] = value
    return arr


# field -> corruption(db, rng) that breaks at least one documented invariant
MUTATIONS = {
    "gate_orientation": lambda db, i: _set(db.gate_orientation, i, 8),
    "gate_cell_type": lambda db, i: _set(db.gate_cell_type, i, len(db.vocab.cell_type) + 3),
    "gate_x": lambda db, i: _set(db.gate_x, i, db.gate_x[i] + 7),
    "gate_y": lambda db, i: _set(db.gate_y, i, db.gate_y[i] - 3),
    "gate_place_flag": lambda db, i: _set(db.gate_place_flag, i, 0 if db.gate_place_flag[i] else 1),
    "gate_placed": lambda db, i: _set(db.gate_placed, i, not db.gate_placed[i]),
    "gate_area": lambda db, i: _set(db.gate_area, i, -1.0),
    "gate_power_leak": lambda db, i: _set(db.gate_power_leak, i, np.nan),
    "pin_owner": lambda db, i: _set(db.pin_owner, i, db.num_gates),
    "pin_type": lambda db, i: _set(db.pin_type, i, 3),
    "pin_cell_type": lambda db, i: _set(db.pin_cell_type, i, db.pin_cell_type[i] + 1),
    "pin_x": lambda db, i: _set(db.pin_x, i, db.pin_x[i] + 1),
    "pin_y": lambda db, i: _set(db.pin_y, i, db.pin_y[i] + 1),
    "pin_net": lambda db, i: _set(db.pin_net, i, db.pin_net[i] + 1 if db.pin_net[i] + 1 < db.num_nets else -1),
    "net_type": lambda db, i: _set(db.net_type, i, 6),
    "net_pin_count": lambda db, i: _set(db.net_pin_count, i, db.net_pin_count[i] + 1),
    "net_ptr": lambda db, i: _set(db.net_ptr, len(db.net_ptr) - 1, db.net_ptr[-1] + 1),
    "member_kind": lambda db, i: _set(db.member_kind, i, 2),
    "member_id": lambda db, i: _set(db.member_id, i, -1),
    "net_driver_kind": lambda db, i: _set(db.net_driver_kind, i, -1 if db.net_driver_kind[i] >= 0 else KIND_PIN),
    "net_driver_id": lambda db, i: _set(db.net_driver_id, i, db.net_driver_id[i] + db.num_pins + 1),
    "io_direction": lambda db, i: _set(db.io_direction, i, 7),
    "io_orientation": lambda db, i: _set(db.io_orientation, i, -1),
    "io_layer_id": lambda db, i: _set(db.io_layer_id, i, 999),
    "io_net": lambda db, i: _set(db.io_net, i, db.io_net[i] + 1 if db.io_net[i] + 1 < db.num_nets else -1),
}

_LENGTH = {
    "gate": lambda db: db.num_gates, "pin": lambda db: db.num_pins, "net": lambda db: db.num_nets,
    "io": lambda db: db.num_ios, "member": lambda db: len(db.member_id),
}


@pytest.fixture(scope="module")
def fuzz_base():
    _, _, db = synth(80, 11, io=6)
    assert validate(db) == []
    return db


@pytest.mark.parametrize("field_name", sorted(MUTATIONS))
def test_single_field_corruption_detected(fuzz_base, field_name):
    rng = np.random.default_rng(abs(hash(field_name)) % 2**32)
    prefix = field_name.split("_")[0]
    for _ in range(10):
        db = copy.copy(fuzz_base)
        if field_name in ("net_driver_kind", "net_driver_id"):
            candidates = np.flatnonzero(db.net_driver_kind >= 0)
        else:
            candidates = np.arange(_LENGTH[prefix](db) if prefix in _LENGTH else 1)
        i = int(rng.choice(candidates))
        setattr(db, field_name, MUTATIONS[field_name](db, i))
        assert validate(db), f"corrupting {field_name}[{i}] went unnoticed"


def test_shape_corruption_detected(fuzz_base):
    db = copy.copy(fuzz_base)
    db.gate_x = db.gate_x[:-1]
    assert [i.code for i in validate(db)] == ["ShapeMismatch"]


def test_duplicate_name_detected(fuzz_base):
    db = copy.copy(fuzz_base)
    db.net_names = list(db.net_names)
    db.net_names[1] = db.net_names[0]
    assert "DuplicateName" in [i.code for i in validate(db)]


def test_generated_databases_validate_clean():
    for seed in range(10):
        for stage in ("floorplan", "placement", "routing"):
            _, _, db = synth(30 + seed * 13, seed, stage=stage, io=seed % 5)
            assert validate(db) == [], (seed, stage)


def test_member_kind_constants():
    assert (KIND_PIN, KIND_IO) == (0, 1)
    assert (PIN_INPUT, PIN_OUTPUT, PIN_INOUT) == (0, 1, 2)

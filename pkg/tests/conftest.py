import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from defgraph.circuit_db import TechTable, resolve  # noqa: E402
from defgraph.def_parser import parse_def  # noqa: E402
from defgraph.syngen import GenSpec, generate_design, tech_table_text  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

TOY_DEF = """DESIGN toy ;
UNITS DISTANCE MICRONS 1000 ;
DIEAREA ( 0 0 ) ( 1000 1000 ) ;
COMPONENTS 2 ;
 - g1 BUF + PLACED ( 0 0 ) N ;
 - g2 BUF + PLACED ( 100 50 ) N ;
END COMPONENTS
NETS 1 ;
 - n1 ( g1 Z ) ( g2 A ) + USE SIGNAL
   + ROUTED metal2 ( 0 0 ) ( * 50 ) via2_3
   NEW metal3 ( 0 50 ) ( 100 * ) ;
END NETS
END DESIGN
"""
TOY_TECH = "BUF A input 1.0 0.5\nBUF Z output 1.0 0.5\n"


def toy_db():
    """Two BUF gates with two pins each and one net g1.Z -> g2.A."""
    return resolve(parse_def(TOY_DEF), tech=TechTable.parse(TOY_TECH), all_cell_pins=True)


SYN_TECH = TechTable.parse(tech_table_text())


def synth(gates, seed, stage="routing", fanout=2.0, io=4, via_stack=0, vocab=None):
    text, truth = generate_design(GenSpec(gates=gates, avg_fanout=fanout, io_count=io, seed=seed,
                                          stage=stage, via_stack=via_stack))
    return text, truth, resolve(parse_def(text), vocab, tech=SYN_TECH)


@pytest.fixture
def toy():
    return toy_db()


@pytest.fixture(scope="session")
def listing1_text():
    return (FIXTURES / "listing1.def").read_text()


# -- one summary line per acceptance criterion ---------------------------------------

_CRITERIA: dict[int, list[str]] = {}
_CRITERION_RE = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        outcomes = _CRITERIA[number]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({len(outcomes)} checks)")

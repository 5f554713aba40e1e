"""Convert DEF layouts into typed multi-view circuit graphs with stage-aware labels."""

from .circuit_db import DesignDatabase, TechTable, Vocabularies, resolve, validate
from .def_parser import Stage, detect_stage, emit_def, parse_def, read_def, tokenize_def
from .errors import DefGraphError
from .labels import compute_labels
from .views import CircuitGraph, build_view, check_parity

__version__ = "0.1.0"

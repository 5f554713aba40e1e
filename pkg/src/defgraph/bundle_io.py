"""On-disk graph bundles: a JSON manifest plus raw little-endian column files.

Layout of a bundle directory::

    manifest.json          written last; its presence marks a complete bundle
    vocab.tsv              vocabulary sidecar (kind, name, id per line)
    tables/<table>.<col>   one file per column, int64 or float64, little-endian

Typed graphs store one table per node kind (``node.<kind>``) and per edge kind
(``edge.<src>-<relation>-<dst>``). Homogeneous graphs store ``nodes``,
``edges``, ``labels`` and, after splitting, ``designs``. See
``docs/bundle-format.md`` for the byte-level description.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .circuit_db import Vocabularies
from .def_parser import Stage
from .errors import CorruptBundle, VersionMismatch
from .homograph import HomoGraph
from .stats import degree_stats
from .views import CircuitGraph, EdgeTable, NodeTable

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
VOCAB = "vocab.tsv"
TABLES = "tables"
_DTYPES = {"i64": np.dtype("<i8"), "f64": np.dtype("<f8")}


def manifest_dumps(obj: dict) -> bytes:
    """Canonical JSON text used for manifests and config files."""
    return (json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=True) + "\n").encode("ascii")


class _Writer:
    def __init__(self, root: Path):
        self.root = root
        self.tables: list[dict] = []

    def table(self, name: str, rows: int, columns: list[tuple[str, np.ndarray]], **extra) -> None:
        entry = {"name": name, "rows": int(rows), "columns": [], **extra}
        for col_name, values in columns:
            values = np.asarray(values)
            logical = "bool" if values.dtype == bool else None
            tag = "f64" if values.dtype.kind == "f" else "i64"
            data = np.ascontiguousarray(values, dtype=_DTYPES[tag])
            if data.ndim != 1 or len(data) != rows:
                raise ValueError(f"column {name}.{col_name} has shape {data.shape}, expected ({rows},)")
            payload = data.tobytes()
            fname = f"{name}.{col_name}"
            (self.root / TABLES / fname).write_bytes(payload)
            col = {"name": col_name, "dtype": tag, "bytes": len(payload),
                   "sha256": hashlib.sha256(payload).hexdigest()}
            if logical:
                col["logical"] = logical
            entry["columns"].append(col)
        self.tables.append(entry)


def _prepare(path: Union[str, os.PathLike]) -> Path:
    root = Path(path)
    if root.exists():
        if not root.is_dir():
            raise NotADirectoryError(f"{root}: bundle path exists and is not a directory")
        # a stale manifest must never describe half-written tables
        (root / MANIFEST).unlink(missing_ok=True)
        shutil.rmtree(root / TABLES, ignore_errors=True)
    (root / TABLES).mkdir(parents=True, exist_ok=True)
    return root


def _finish(root: Path, manifest: dict, vocab: Optional[Vocabularies]) -> None:
    if vocab is not None:
        payload = vocab.to_tsv().encode("utf-8")
        (root / VOCAB).write_bytes(payload)
        manifest["vocab_hash"] = hashlib.sha256(payload).hexdigest()
    else:
        (root / VOCAB).unlink(missing_ok=True)
        manifest["vocab_hash"] = None
    tmp = root / (MANIFEST + ".tmp")
    tmp.write_bytes(manifest_dumps(manifest))
    os.replace(tmp, root / MANIFEST)


def _decisions(meta: dict) -> dict:
    keys = ("pin_geom", "expansion", "view_variant", "include_special")
    return {k: meta[k] for k in keys if k in meta}


def write_bundle(g: Union[CircuitGraph, HomoGraph], path: Union[str, os.PathLike]) -> Path:
    """Write ``g`` as a bundle directory; identical graphs give identical bytes."""
    root = _prepare(path)
    w = _Writer(root)
    try:
        if isinstance(g, CircuitGraph):
            manifest = _write_typed(g, w)
        elif isinstance(g, HomoGraph):
            manifest = _write_homo(g, w)
        else:
            raise TypeError(f"cannot write {type(g).__name__} as a bundle")
    except OSError as exc:
        raise OSError(f"{root}: {exc}") from exc
    manifest["format_version"] = FORMAT_VERSION
    manifest["tables"] = w.tables
    deg = degree_stats(g)
    manifest["stats"] = {k: deg[k] for k in ("num_nodes", "num_edges", "avg_degree")}
    _finish(root, manifest, g.vocab)
    return root


def _write_typed(g: CircuitGraph, w: _Writer) -> dict:
    for t in g.node_tables.values():
        cols = list(t.columns.items()) + [(f"label.{k}", v) for k, v in t.labels.items()]
        if t.label_mask is not None:
            cols.append(("label_mask", t.label_mask))
        w.table(f"node.{t.kind}", t.count, cols, kind="node", entity=t.kind,
                carries_net=t.carries_net, labeled=t.label_mask is not None)
    for t in g.edge_tables.values():
        cols = [("src", t.src), ("dst", t.dst), ("direction", t.direction)]
        cols += [(f"prov.{k}", v) for k, v in t.provenance.items()]
        cols += list(t.columns.items())
        cols += [(f"label.{k}", v) for k, v in t.labels.items()]
        if t.label_mask is not None:
            cols.append(("label_mask", t.label_mask))
        w.table(f"edge.{t.key}", t.row_count(), cols, kind="edge", src_kind=t.src_kind,
                relation=t.relation, dst_kind=t.dst_kind, carries_net=t.carries_net,
                labeled=t.label_mask is not None)
    return {
        "graph": "typed",
        "design_name": g.design_name,
        "view": g.view,
        "stage": g.stage.value,
        "variant": g.variant,
        "label_stage": g.label_stage.value if g.label_stage else None,
        "decisions": _decisions(g.meta),
        "meta": g.meta,
    }


def _matrix_columns(prefix: str, names: tuple[str, ...], kinds: tuple[str, ...], x: np.ndarray):
    labels = [f"kind={k}" for k in kinds] + list(names)
    return [(f"{prefix}{i:03d}", x[:, i]) for i in range(len(labels))], labels


def _write_homo(h: HomoGraph, w: _Writer) -> dict:
    node_cols, node_layout = _matrix_columns("x", h.node_slots, h.node_kinds, h.node_x)
    w.table("nodes", h.num_nodes, [("kind", h.node_kind), ("orig", h.node_orig), ("design", h.node_design)]
            + node_cols, kind="nodes")
    edge_cols, edge_layout = _matrix_columns("x", h.edge_slots, h.edge_kinds, h.edge_x)
    w.table("edges", h.num_edges,
            [("kind", h.edge_kind), ("src", h.src), ("dst", h.dst), ("direction", h.direction),
             ("design", h.edge_design)]
            + [(f"prov.{k}", v) for k, v in h.edge_provenance.items()] + edge_cols, kind="edges")
    rows = len(h.label_carrier)
    w.table("labels", rows,
            [(f"y{j:03d}", h.y[:, j]) for j in range(len(h.label_names))]
            + [("carrier", h.label_carrier), ("mask", h.label_mask)], kind="labels", level=h.label_level)
    if h.design_split is not None:
        w.table("designs", h.num_designs, [("split", h.design_split)], kind="designs")
    decisions = _decisions(h.meta)
    decisions["split_policy"] = h.split_policy
    return {
        "graph": "homo",
        "design_names": h.design_names,
        "view": h.view,
        "stage": h.stage.value,
        "variant": h.variant,
        "decisions": decisions,
        "slot_map": {
            "node_kinds": list(h.node_kinds), "edge_kinds": list(h.edge_kinds),
            "node_slots": list(h.node_slots), "edge_slots": list(h.edge_slots),
            "node_layout": node_layout, "edge_layout": edge_layout, "slot_dtypes": h.slot_dtypes,
        },
        "label_names": list(h.label_names),
        "meta": h.meta,
    }


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------


def read_manifest(path: Union[str, os.PathLike]) -> dict:
    root = Path(path)
    mpath = root / MANIFEST
    if not mpath.is_file():
        raise CorruptBundle(str(mpath), "manifest missing (bundle incomplete or not a bundle)")
    try:
        manifest = json.loads(mpath.read_text(encoding="ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptBundle(str(mpath), f"unreadable manifest: {exc}") from None
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{mpath}: format_version {version!r} is not supported (expected {FORMAT_VERSION})")
    return manifest


def _load_tables(root: Path, manifest: dict) -> dict[str, dict[str, np.ndarray]]:
    out = {}
    for entry in manifest["tables"]:
        cols = {}
        rows = entry["rows"]
        for col in entry["columns"]:
            fpath = root / TABLES / f"{entry['name']}.{col['name']}"
            try:
                payload = fpath.read_bytes()
            except FileNotFoundError:
                raise CorruptBundle(str(fpath), "column file missing") from None
            dtype = _DTYPES.get(col["dtype"])
            if dtype is None:
                raise CorruptBundle(str(fpath), f"unknown dtype {col['dtype']!r}")
            if len(payload) != col["bytes"] or len(payload) != rows * dtype.itemsize:
                raise CorruptBundle(str(fpath), f"length {len(payload)} bytes, expected {rows * dtype.itemsize}")
            if hashlib.sha256(payload).hexdigest() != col["sha256"]:
                raise CorruptBundle(str(fpath), "sha256 mismatch")
            values = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder("="))
            if col.get("logical") == "bool":
                values = values.astype(bool)
            cols[col["name"]] = values
        out[entry["name"]] = cols
    return out


def _load_vocab(root: Path, manifest: dict) -> Optional[Vocabularies]:
    expected = manifest.get("vocab_hash")
    vpath = root / VOCAB
    if expected is None:
        return None
    try:
        payload = vpath.read_bytes()
    except FileNotFoundError:
        raise CorruptBundle(str(vpath), "vocabulary sidecar missing") from None
    if hashlib.sha256(payload).hexdigest() != expected:
        raise CorruptBundle(str(vpath), "vocabulary hash does not match manifest")
    return Vocabularies.from_tsv(payload.decode("utf-8"))


def read_bundle(path: Union[str, os.PathLike]) -> Union[CircuitGraph, HomoGraph]:
    root = Path(path)
    manifest = read_manifest(root)
    tables = _load_tables(root, manifest)
    vocab = _load_vocab(root, manifest)
    try:
        if manifest["graph"] == "typed":
            return _read_typed(manifest, tables, vocab)
        if manifest["graph"] == "homo":
            return _read_homo(manifest, tables, vocab)
    except KeyError as exc:
        raise CorruptBundle(str(root / MANIFEST), f"missing entry {exc}") from None
    raise CorruptBundle(str(root / MANIFEST), f"unknown graph type {manifest['graph']!r}")


def _split_columns(cols: dict[str, np.ndarray]):
    feats, labels, prov = {}, {}, {}
    mask = None
    for name, values in cols.items():
        if name == "label_mask":
            mask = values
        elif name.startswith("label."):
            labels[name[len("label."):]] = values
        elif name.startswith("prov."):
            prov[name[len("prov."):]] = values
        elif name not in ("src", "dst", "direction"):
            feats[name] = values
    return feats, labels, prov, mask


def _read_typed(manifest: dict, tables: dict, vocab) -> CircuitGraph:
    g = CircuitGraph(
        manifest["design_name"], manifest["view"], Stage.parse(manifest["stage"]),
        variant=manifest["variant"],
        label_stage=Stage.parse(manifest["label_stage"]) if manifest["label_stage"] else None,
        meta=manifest["meta"], vocab=vocab,
    )
    for entry in manifest["tables"]:
        cols = tables[entry["name"]]
        feats, labels, prov, mask = _split_columns(cols)
        if entry["kind"] == "node":
            g.node_tables[entry["entity"]] = NodeTable(entry["entity"], entry["rows"], feats, entry["carries_net"],
                                                       labels, mask)
        else:
            t = EdgeTable(entry["src_kind"], entry["relation"], entry["dst_kind"], cols["src"], cols["dst"],
                          cols["direction"], prov, feats, entry["carries_net"], labels, mask)
            g.edge_tables[t.key] = t
    return g


def _stack(cols: dict[str, np.ndarray], count: int, rows: int) -> np.ndarray:
    if count == 0:
        return np.zeros((rows, 0), dtype=np.float64)
    return np.stack([cols[f"x{i:03d}"] for i in range(count)], axis=1).astype(np.float64)


def _read_homo(manifest: dict, tables: dict, vocab) -> HomoGraph:
    sm = manifest["slot_map"]
    nodes, edges, labels = tables["nodes"], tables["edges"], tables["labels"]
    V, E = len(nodes["kind"]), len(edges["kind"])
    n_label = len(manifest["label_names"])
    y = (np.stack([labels[f"y{j:03d}"] for j in range(n_label)], axis=1) if n_label
         else np.zeros((len(labels["carrier"]), 0)))
    label_entry = next(e for e in manifest["tables"] if e["name"] == "labels")
    decisions = manifest["decisions"]
    h = HomoGraph(
        view=manifest["view"], stage=Stage.parse(manifest["stage"]), variant=manifest["variant"],
        node_kinds=tuple(sm["node_kinds"]), edge_kinds=tuple(sm["edge_kinds"]),
        node_slots=tuple(sm["node_slots"]), edge_slots=tuple(sm["edge_slots"]),
        slot_dtypes=sm["slot_dtypes"], node_kind=nodes["kind"], node_orig=nodes["orig"],
        node_x=_stack(nodes, len(sm["node_layout"]), V), edge_kind=edges["kind"], src=edges["src"],
        dst=edges["dst"], direction=edges["direction"], edge_x=_stack(edges, len(sm["edge_layout"]), E),
        edge_provenance={k[len("prov."):]: v for k, v in edges.items() if k.startswith("prov.")},
        label_level=label_entry["level"], label_names=tuple(manifest["label_names"]), y=y.astype(np.float64),
        label_carrier=labels["carrier"], label_mask=labels["mask"], node_design=nodes["design"],
        edge_design=edges["design"], design_names=manifest["design_names"], meta=manifest["meta"], vocab=vocab,
        split_policy=decisions.get("split_policy"),
    )
    if "designs" in tables:
        h.design_split = tables["designs"]["split"]
    return h


def bundle_files(path: Union[str, os.PathLike]) -> dict[str, bytes]:
    """Relative path -> contents for every file of a bundle (used for byte comparisons)."""
    root = Path(path)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}

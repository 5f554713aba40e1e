"""Graph statistics: node/edge counts, average degree and average shortest path.

Graphs are treated as undirected simple graphs: parallel edges and edge
direction are ignored and self-loops dropped. Average shortest path is the
mean over ordered reachable pairs (u != v); unreachable pairs are left out and
a graph without edges scores 0.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import shortest_path

logger = logging.getLogger(__name__)

EXACT_LIMIT = 10_000
DEFAULT_SAMPLES = 1024
# cap on the dense distance block held at once (float64 entries)
_BLOCK_ENTRIES = 4_000_000

CONVENTIONS = {
    "graph_semantics": "undirected simple (parallel edges collapsed, self-loops dropped)",
    "avg_degree": "2*|E_simple|/|V|",
    "num_edges": "stored edge count before collapsing",
    "unreachable_pairs": "excluded",
    "edgeless_graph_asp": "0",
}


def _endpoints(g) -> tuple[int, np.ndarray, np.ndarray]:
    if isinstance(g, tuple):
        n, src, dst = g
        return int(n), np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)
    return g.undirected_edges()


def simple_adjacency(g) -> csr_matrix:
    """Symmetric 0/1 adjacency of the simple undirected graph behind ``g``."""
    n, src, dst = _endpoints(g)
    keep = src != dst
    s, d = src[keep], dst[keep]
    lo, hi = np.minimum(s, d), np.maximum(s, d)
    if len(lo):
        key = np.unique(lo * max(n, 1) + hi)
        lo, hi = key // max(n, 1), key % max(n, 1)
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    data = np.ones(len(rows), dtype=np.int8)
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def degree_stats(g) -> dict:
    n, src, _ = _endpoints(g)
    if n == 0:
        return {"num_nodes": 0, "num_edges": 0, "avg_degree": 0.0}
    adj = simple_adjacency(g)
    simple_edges = adj.nnz // 2
    return {"num_nodes": n, "num_edges": int(len(src)), "avg_degree": 2.0 * simple_edges / n}


def _bfs_sum(adj: csr_matrix, sources: np.ndarray) -> tuple[int, int]:
    """Total hop distance and count of reachable ordered pairs from ``sources``."""
    n = adj.shape[0]
    block = max(1, _BLOCK_ENTRIES // max(n, 1))
    total = pairs = 0
    for start in range(0, len(sources), block):
        chunk = sources[start : start + block]
        dist = shortest_path(adj, method="D", directed=False, unweighted=True, indices=chunk)
        finite = np.isfinite(dist) & (dist > 0)
        total += int(dist[finite].sum())
        pairs += int(finite.sum())
    return total, pairs


def avg_shortest_path(g, mode: str = "auto", k: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    """Mean hop distance over reachable ordered pairs.

    ``mode`` is ``"exact"`` (BFS from every node), ``"sampled"`` (BFS from
    ``k`` nodes drawn without replacement under ``seed``) or ``"auto"`` (exact
    up to 10 000 nodes, sampled above).
    """
    adj = simple_adjacency(g)
    n = adj.shape[0]
    if adj.nnz == 0:
        return 0.0
    if mode == "auto":
        mode = "exact" if n <= EXACT_LIMIT else "sampled"
    if mode == "exact":
        sources = np.arange(n, dtype=np.int64)
    elif mode == "sampled":
        if k <= 0:
            raise ValueError("sample size must be positive")
        if k >= n:
            sources = np.arange(n, dtype=np.int64)
        else:
            sources = np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    total, pairs = _bfs_sum(adj, sources)
    return total / pairs if pairs else 0.0


def graph_stats(g, mode: str = "auto", k: int = DEFAULT_SAMPLES, seed: int = 0,
                with_paths: bool = True) -> dict:
    out = degree_stats(g)
    if with_paths:
        resolved = mode if mode != "auto" else ("exact" if out["num_nodes"] <= EXACT_LIMIT else "sampled")
        out["avg_shortest_path"] = avg_shortest_path(g, resolved, k, seed)
        out["asp_mode"] = resolved
        if resolved == "sampled":
            out["asp_samples"] = min(k, out["num_nodes"])
            out["asp_seed"] = seed
    return out


def format_report(stats: dict, conventions: Optional[dict] = None) -> str:
    """Flat ``key=value`` lines, stats first then the conventions they follow."""
    lines = [f"{key}={_fmt(value)}" for key, value in stats.items()]
    for key, value in (conventions if conventions is not None else CONVENTIONS).items():
        lines.append(f"convention.{key}={value}")
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)

"""Multi-layer network ingestion and the two-center decomposition.

A layer stack is a set of binary adjacency matrices over one node set.
Centering by the layer mean turns a two-population stack into (roughly)
the mixture model: centered layers look like ``+/- M + noise`` with
``M = (P1 - P2) / 2``, so the spectral pipeline recovers the two
population centers as ``mean + m_hat`` and ``mean - m_hat``.
"""

from __future__ import annotations

import csv
import dataclasses
import pathlib

import numpy as np

from .estimators import EstimatorConfig, estimate
from .exceptions import (EmptyStack, IndexOutOfRange, LabelMismatch,
                         ParseError)
from .linalg import save_matrix_csv
from .model import SampleSet


@dataclasses.dataclass
class LayerStack:
    """Binary layers of shape (n_layers, d, d) with their file order."""

    layers: np.ndarray
    node_count: int
    layer_ids: list[str]

    def __post_init__(self):
        self.layers = np.asarray(self.layers, dtype=np.float64)
        if self.layers.ndim != 3 or self.layers.shape[1] != self.layers.shape[2]:
            raise ParseError("layers must be a stack of square matrices")
        if self.layers.shape[1] != self.node_count:
            raise ParseError("layer shape disagrees with node_count")
        if self.layers.size and not np.all(np.isin(self.layers, (0.0, 1.0))):
            raise ParseError("layer entries must be 0 or 1")
        if len(self.layer_ids) != self.layers.shape[0]:
            raise ParseError("layer_ids length disagrees with the stack")


@dataclasses.dataclass
class CenterPair:
    """The two recovered population centers and their parts."""

    m1: np.ndarray
    m2: np.ndarray
    mean: np.ndarray
    m_hat: np.ndarray


def load_layers(path, undirected: bool = False, node_count: int | None = None) -> LayerStack:
    """Read a TSV edge list ``layer_id<TAB>src<TAB>dst`` into a stack.

    Node indices are 0-based.  Layers appear in first-occurrence order
    of their ids.  Duplicate edges are idempotent; ``undirected`` also
    sets the mirrored entry.  Without ``node_count`` the node set is
    ``0 .. max index seen``.

    Raises
    ------
    ParseError
        On malformed rows, with the 1-based line number.
    IndexOutOfRange
        If an index is not below the declared ``node_count``.
    """
    edges: list[tuple[str, int, int]] = []
    order: list[str] = []
    seen: set[str] = set()
    max_index = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(
                    f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            layer_id = parts[0]
            try:
                src, dst = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(f"line {lineno}: node indices must be integers") from None
            if src < 0 or dst < 0:
                raise ParseError(f"line {lineno}: node indices must be >= 0")
            if node_count is not None and (src >= node_count or dst >= node_count):
                raise IndexOutOfRange(
                    f"line {lineno}: index {max(src, dst)} outside 0..{node_count - 1}")
            if layer_id not in seen:
                seen.add(layer_id)
                order.append(layer_id)
            edges.append((layer_id, src, dst))
            max_index = max(max_index, src, dst)

    d = int(node_count) if node_count is not None else max_index + 1
    index = {layer_id: i for i, layer_id in enumerate(order)}
    layers = np.zeros((len(order), d, d))
    for layer_id, src, dst in edges:
        layers[index[layer_id], src, dst] = 1.0
        if undirected:
            layers[index[layer_id], dst, src] = 1.0
    return LayerStack(layers=layers, node_count=d, layer_ids=order)


def save_layers(stack: LayerStack, path) -> None:
    """Write a stack back to TSV, one row per nonzero entry.

    Entries are written in layer order, row-major, as directed edges;
    reloading with ``undirected=False`` and the stack's node count
    reproduces the stack exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for layer_id, layer in zip(stack.layer_ids, stack.layers):
            for i, j in zip(*np.nonzero(layer)):
                fh.write(f"{layer_id}\t{i}\t{j}\n")


def center_stack(stack: LayerStack) -> tuple[np.ndarray, SampleSet]:
    """Subtract the layer mean; returns the mean and the centered set."""
    if stack.layers.shape[0] < 2:
        raise EmptyStack(
            f"centering needs at least 2 layers, got {stack.layers.shape[0]}")
    mean = stack.layers.mean(axis=0)
    centered = stack.layers - mean
    return mean, SampleSet(observations=centered, labels=None,
                           noise_scale=1.0, seed=0)


def estimate_pair(stack: LayerStack, rank: int = 10,
                  floor_dim_rule: str = "max_dim") -> CenterPair:
    """Recover the two population centers from a centered stack.

    Runs the no-split spectral pipeline at the given rank on the
    centered layers and forms ``mean +/- m_hat``.
    """
    if stack.layers.shape[0] < 4:
        raise EmptyStack(
            f"pair estimation needs at least 4 layers, got {stack.layers.shape[0]}")
    mean, centered = center_stack(stack)
    report = estimate(centered, EstimatorConfig(rank=rank, split=False,
                                                floor_dim_rule=floor_dim_rule))
    return CenterPair(m1=mean + report.m_hat, m2=mean - report.m_hat,
                      mean=mean, m_hat=report.m_hat)


def load_labels(path, node_count: int) -> list[str]:
    """Read a ``node,community`` CSV covering nodes 0..node_count-1.

    A first row reading ``node,community`` is treated as a header.
    Every node must appear exactly once; extra or missing nodes raise
    :class:`~lrmm.exceptions.LabelMismatch`.
    """
    communities: dict[int, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if lineno == 1 and [c.strip().lower() for c in rec] == ["node", "community"]:
                continue
            if len(rec) != 2:
                raise ParseError(f"line {lineno}: expected node,community")
            try:
                node = int(rec[0])
            except ValueError:
                raise ParseError(f"line {lineno}: node must be an integer") from None
            if node < 0 or node >= node_count:
                raise LabelMismatch(f"line {lineno}: node {node} outside 0..{node_count - 1}")
            if node in communities:
                raise LabelMismatch(f"line {lineno}: node {node} labelled twice")
            communities[node] = rec[1].strip()
    missing = [i for i in range(node_count) if i not in communities]
    if missing:
        raise LabelMismatch(f"nodes without a community label: {missing[:10]}")
    return [communities[i] for i in range(node_count)]


def community_order(labels: list[str]) -> np.ndarray:
    """Permutation grouping equal communities, stable by node index."""
    return np.array(sorted(range(len(labels)), key=lambda i: (labels[i], i)),
                    dtype=np.intp)


def _to_pgm_pixels(a: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi <= lo:
        return np.zeros(a.shape, dtype=np.int64)
    return np.rint(255.0 * (a - lo) / (hi - lo)).astype(np.int64)


def write_pgm(path, pixels: np.ndarray) -> None:
    """Write an integer matrix in ASCII PGM (P2), one matrix row per line."""
    rows, cols = pixels.shape
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"P2\n{cols} {rows}\n255\n")
        for row in pixels:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def reorder_and_export(pair: CenterPair, labels: list[str] | None, out_dir) -> dict[str, str]:
    """Export the two centers as matrix CSV and grayscale PGM images.

    With labels, rows and columns are permuted to group communities
    (stable by node index).  Both PGMs share one min/max scaling so the
    images are comparable; a constant pair maps to all-zero pixels.
    Returns a name -> path map of the written files.
    """
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    d = pair.m1.shape[0]
    if labels is None:
        perm = np.arange(d, dtype=np.intp)
    else:
        if len(labels) != d:
            raise LabelMismatch(f"{len(labels)} labels for {d} nodes")
        perm = community_order(labels)
    m1 = pair.m1[np.ix_(perm, perm)]
    m2 = pair.m2[np.ix_(perm, perm)]
    lo = float(min(m1.min(), m2.min()))
    hi = float(max(m1.max(), m2.max()))
    written = {}
    for name, matrix in (("m1", m1), ("m2", m2)):
        csv_path = out_dir / f"{name}.csv"
        save_matrix_csv(csv_path, matrix)
        written[f"{name}.csv"] = str(csv_path)
        pgm_path = out_dir / f"{name}.pgm"
        write_pgm(pgm_path, _to_pgm_pixels(matrix, lo, hi))
        written[f"{name}.pgm"] = str(pgm_path)
    return written

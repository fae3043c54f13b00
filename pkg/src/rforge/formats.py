"""Plain-text file formats for graphs, dense matrices, and weight maps.

Numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly, so reading back a written file reproduces the in-memory
object bit for bit.

Edge lists:
    # comment lines start with a hash; inline comments are stripped
    n 5
    0<TAB>1<TAB>2.5
    ...
Vertex indices are 0-based; pairs are canonicalized to i < j on read, and
self-loops are dropped with a warning.

Dense matrices (also used for point sets and operator inputs):
    rows cols
    one whitespace-separated row per line

Weight maps:
    index<TAB>weight
plus a JSON sidecar (same path + ".json") holding the certificate written
by the caller.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .graphs import WeightedGraph


class ParseError(ValueError):
    """Input file is malformed; carries the offending 1-based line number."""

    def __init__(self, path, line_number: int, message: str):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {message}")


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _content_lines(path):
    with open(path, "r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield number, text


def write_graph(path, g: WeightedGraph) -> None:
    lines = [f"n {g.n}"]
    lines += [f"{i}\t{j}\t{_fmt(w)}" for i, j, w in g.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path) -> WeightedGraph:
    lines = list(_content_lines(path))
    if not lines:
        raise ParseError(path, 1, "empty graph file; expected a 'n <vertexcount>' header")
    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "n":
        raise ParseError(path, header_no, f"expected header 'n <vertexcount>', got {header!r}")
    try:
        n = int(parts[1])
    except ValueError:
        raise ParseError(path, header_no, f"vertex count {parts[1]!r} is not an integer") from None
    if n < 1:
        raise ParseError(path, header_no, f"vertex count must be positive, got {n}")

    edges: list[tuple[int, int, float]] = []
    seen: dict[tuple[int, int], int] = {}
    for number, text in lines[1:]:
        fields = text.split()
        if len(fields) != 3:
            raise ParseError(path, number, f"expected 'i<TAB>j<TAB>w', got {text!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
            w = float(fields[2])
        except ValueError:
            raise ParseError(path, number, f"could not parse edge fields {fields!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(path, number, f"vertex index out of range in edge ({i}, {j})")
        if i == j:
            warnings.warn(f"ignoring self-loop at vertex {i}; it has no effect", stacklevel=2)
            continue
        pair = (min(i, j), max(i, j))
        if pair in seen:
            raise ParseError(
                path, number, f"duplicate edge {pair} (first seen on line {seen[pair]})"
            )
        seen[pair] = number
        if not w > 0:
            raise ParseError(path, number, f"edge {pair} has nonpositive weight {w}")
        edges.append((pair[0], pair[1], w))
    return WeightedGraph(n, edges)


def write_matrix(path, matrix: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(_fmt(v) for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path) -> np.ndarray:
    lines = list(_content_lines(path))
    if not lines:
        raise ParseError(path, 1, "empty matrix file; expected a 'rows cols' header")
    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise ParseError(path, header_no, f"expected header 'rows cols', got {header!r}")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(path, header_no, f"header fields {parts!r} are not integers") from None
    if rows < 1 or cols < 1:
        raise ParseError(path, header_no, f"matrix shape ({rows}, {cols}) must be positive")
    if len(lines) - 1 != rows:
        raise ParseError(
            path, lines[-1][0], f"expected {rows} data rows, found {len(lines) - 1}"
        )
    out = np.empty((rows, cols))
    for r, (number, text) in enumerate(lines[1:]):
        fields = text.split()
        if len(fields) != cols:
            raise ParseError(path, number, f"expected {cols} values, found {len(fields)}")
        try:
            out[r] = [float(f) for f in fields]
        except ValueError:
            raise ParseError(path, number, f"could not parse row {fields!r}") from None
    return out


def write_weights(path, weights: dict[int, float], certificate: dict) -> None:
    lines = [f"{idx}\t{_fmt(w)}" for idx, w in sorted(weights.items())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    sidecar = Path(str(path) + ".json")
    sidecar.write_text(json.dumps(certificate, indent=2) + "\n", encoding="utf-8")


def read_weights(path) -> dict[int, float]:
    out: dict[int, float] = {}
    for number, text in _content_lines(path):
        fields = text.split()
        if len(fields) != 2:
            raise ParseError(path, number, f"expected 'index<TAB>weight', got {text!r}")
        try:
            idx, w = int(fields[0]), float(fields[1])
        except ValueError:
            raise ParseError(path, number, f"could not parse weight line {fields!r}") from None
        if idx in out:
            raise ParseError(path, number, f"duplicate index {idx}")
        out[idx] = w
    return out

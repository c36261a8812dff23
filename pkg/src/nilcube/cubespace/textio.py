"""Plain-text format for finite cubespaces and maps.

::

    # comments and blank lines are ignored
    points: a b c
    k_max: 2
    [cubes.1]
    a b
    ...
    [cubes.2]
    a b b c
    [map]
    a -> b

Labels are whitespace-free tokens.  Cube rows list labels in binary vertex
order.  A ``[map]`` section is only meaningful in map files, which describe
the target space followed by the assignment ``source -> target``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .space import CubespaceError, CubespaceMap, FiniteCubespace

_SECTION = re.compile(r"^\[(cubes\.(\d+)|map)\]$")


class FormatError(CubespaceError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class ParsedDocument:
    space: FiniteCubespace
    map_pairs: dict[str, str] | None
    map_line: int = 0


def parse_document(text: str) -> ParsedDocument:
    points = None
    k_max = None
    sections: dict[int, list[tuple[int, list[str]]]] = {}
    map_pairs: dict[str, str] | None = None
    map_line = 0
    current = None
    header_line = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            if points is None or k_max is None:
                raise FormatError(lineno, "sections must follow 'points:' and 'k_max:'")
            if m.group(1) == "map":
                if map_pairs is not None:
                    raise FormatError(lineno, "duplicate [map] section")
                map_pairs, map_line, current = {}, lineno, "map"
            else:
                k = int(m.group(2))
                if not 1 <= k <= k_max:
                    raise FormatError(lineno, f"cube dimension {k} outside 1..{k_max}")
                if k in sections:
                    raise FormatError(lineno, f"duplicate [cubes.{k}] section")
                sections[k], current = [], k
            continue
        if current is None:
            key, sep, value = line.partition(":")
            key = key.strip()
            if not sep or key not in ("points", "k_max"):
                raise FormatError(lineno, f"expected 'points:' or 'k_max:', got {line!r}")
            if key in header_line:
                raise FormatError(lineno, f"duplicate '{key}:'")
            header_line[key] = lineno
            if key == "points":
                points = value.split()
                if not points:
                    raise FormatError(lineno, "a cubespace needs at least one point")
                if len(set(points)) != len(points):
                    raise FormatError(lineno, "point labels must be distinct")
            else:
                try:
                    k_max = int(value)
                except ValueError:
                    raise FormatError(lineno, f"k_max must be an integer, got {value.strip()!r}") from None
                if not 0 <= k_max <= 16:
                    raise FormatError(lineno, "k_max must lie in 0..16")
            continue
        if current == "map":
            src, arrow, dst = line.partition("->")
            src, dst = src.strip(), dst.strip()
            if not arrow or not src or not dst or len(src.split()) != 1 or len(dst.split()) != 1:
                raise FormatError(lineno, f"expected 'source -> target', got {line!r}")
            if src in map_pairs:
                raise FormatError(lineno, f"point {src!r} mapped twice")
            if dst not in points:
                raise FormatError(lineno, f"unknown target point {dst!r}")
            map_pairs[src] = dst
            continue
        sections[current].append((lineno, line.split()))
    if points is None:
        raise FormatError(1, "missing 'points:' line")
    if k_max is None:
        raise FormatError(1, "missing 'k_max:' line")
    index = {p: i for i, p in enumerate(points)}
    arrays = {}
    for k, rows in sections.items():
        conv = np.zeros((len(rows), 1 << k), dtype=np.int64)
        for r, (lineno, toks) in enumerate(rows):
            if len(toks) != 1 << k:
                raise FormatError(lineno, f"a {k}-cube needs {1 << k} labels, got {len(toks)}")
            for j, t in enumerate(toks):
                if t not in index:
                    raise FormatError(lineno, f"unknown point {t!r}")
                conv[r, j] = index[t]
        arrays[k] = conv
    space = FiniteCubespace.from_arrays(points, arrays, k_max)
    return ParsedDocument(space, map_pairs, map_line)


def read_cubespace(text: str) -> FiniteCubespace:
    doc = parse_document(text)
    if doc.map_pairs is not None:
        raise FormatError(doc.map_line, "unexpected [map] section in a cubespace file")
    return doc.space


def read_map(text: str, source: FiniteCubespace) -> CubespaceMap:
    """Map file: the target space plus a ``[map]`` section."""
    doc = parse_document(text)
    if doc.map_pairs is None:
        raise FormatError(max(1, len(text.splitlines())), "map file has no [map] section")
    unknown = [s for s in doc.map_pairs if s not in source.labels]
    if unknown:
        raise FormatError(doc.map_line, f"unknown source point {unknown[0]!r}")
    missing = [s for s in source.labels if s not in doc.map_pairs]
    if missing:
        raise FormatError(doc.map_line, f"map is not total: no image for {missing[0]!r}")
    return CubespaceMap.from_labels(source, doc.space, doc.map_pairs)


def _check_labels(X: FiniteCubespace) -> None:
    for lab in X.labels:
        if not lab or any(ch.isspace() for ch in lab) or "#" in lab or lab == "->":
            raise CubespaceError(f"label {lab!r} cannot be written in the text format")


def write_cubespace(X: FiniteCubespace) -> str:
    _check_labels(X)
    lines = ["points: " + " ".join(X.labels), f"k_max: {X.k_max}"]
    for k in range(1, X.k_max + 1):
        lines.append(f"[cubes.{k}]")
        lines.extend(" ".join(X.labels[i] for i in row) for row in X.cubes[k].tolist())
    return "\n".join(lines) + "\n"


def write_map(f: CubespaceMap) -> str:
    _check_labels(f.source)
    lines = [write_cubespace(f.target).rstrip("\n"), "[map]"]
    lines.extend(f"{a} -> {b}" for a, b in f.as_pairs())
    return "\n".join(lines) + "\n"

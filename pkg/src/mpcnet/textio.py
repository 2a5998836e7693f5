"""Deterministic text formats: matrix-block export files and CSV writers.

Floats are always rendered as Python's shortest round-trip decimal (repr),
with `\n` line endings, so identical data produces identical bytes.
"""

from __future__ import annotations

import numpy as np


def fmt(v) -> str:
    """Shortest round-trip decimal for a float (integers kept as-is)."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_blocks(path, header: dict, blocks: list):
    """Matrix-block text format: `key value` header lines, then named row blocks."""
    lines = [f"{k} {fmt(v)}" for k, v in header.items()]
    for name, mat in blocks:
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        lines.append(name)
        for row in mat:
            lines.append(" ".join(fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_blocks(path):
    """Inverse of write_blocks: returns (header dict, {name: 2-d float array})."""
    header = {}
    blocks = {}
    current = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            tokens = line.split()
            if current is None and len(tokens) == 2 and not _is_number(tokens[0]):
                try:
                    header[tokens[0]] = float(tokens[1])
                    continue
                except ValueError:
                    pass
            if len(tokens) == 1 and not _is_number(tokens[0]):
                current = tokens[0]
                blocks[current] = []
                continue
            blocks[current].append([float(t) for t in tokens])
    return header, {k: np.array(v) for k, v in blocks.items()}


def _is_number(tok):
    try:
        float(tok)
        return True
    except ValueError:
        return False


def write_csv(path, columns: list[str], rows):
    """RFC-4180-style CSV with numeric cells and `\n` endings."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else fmt(cell) for cell in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

"""Writers for the CSV, key-value and PGM outputs.

All files start with ``#`` comment lines (for PGM, right after the magic
number, which the format requires first). Numbers are written in scientific
notation with 12 significant digits.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def num(x: float) -> str:
    return f"{float(x):.11e}"


def _header(fh, lines: Iterable[str]) -> None:
    for line in lines:
        fh.write(f"# {line}\n")


def write_csv(path, header_lines: Iterable[str], columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        _header(fh, header_lines)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_kv(path, header_lines: Iterable[str], blocks: Sequence[tuple[str, Sequence[str]]]) -> Path:
    """Key-value report: ``[name]`` sections of ``key = value`` lines."""
    path = Path(path)
    with open(path, "w") as fh:
        _header(fh, header_lines)
        for name, lines in blocks:
            fh.write(f"[{name}]\n")
            for line in lines:
                fh.write(f"{line}\n")
            fh.write("\n")
    return path


def pgm_levels(matrix: np.ndarray) -> np.ndarray:
    """Linear 8-bit mapping: 0 -> 0, the matrix maximum -> 255."""
    m = np.asarray(matrix, dtype=float)
    top = m.max() if m.size else 0.0
    if top <= 0:
        return np.zeros(m.shape, dtype=int)
    return np.clip(np.rint(m / top * 255.0), 0, 255).astype(int)


def write_pgm(path, matrix: np.ndarray, header_lines: Iterable[str] = ()) -> Path:
    """ASCII (P2) grayscale image; matrix rows become image rows."""
    path = Path(path)
    levels = pgm_levels(matrix)
    height, width = levels.shape
    with open(path, "w") as fh:
        fh.write("P2\n")
        _header(fh, header_lines)
        fh.write(f"{width} {height}\n255\n")
        for row in levels:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return path


def read_pgm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError("not an ASCII PGM file")
    width, height, _maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:]])
    return data.reshape(height, width)

"""Shared CSV loading and rendering plumbing for the figure scripts.

The scripts consume only the simulator CLI's documented CSV schemas: comma
separated, one header row, each column labeled ``name[unit]``.  No physics
is computed here; schema violations and empty inputs fail loudly before any
file is written.
"""

import argparse
import sys
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")  # render headless and deterministically


class SchemaMismatch(Exception):
    """Input CSV lacks a required column."""


class EmptyInput(Exception):
    """Input CSV has a header but no data rows."""


class Table:
    """A small column-oriented view of one CSV file."""

    def __init__(self, path):
        text = Path(path).read_text(encoding="utf-8")
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise EmptyInput(f"{path}: file is empty")
        header = lines[0].split(",")
        self.path = str(path)
        self.labels = header
        self.names = [h.split("[", 1)[0] for h in header]
        self.units = [
            h.split("[", 1)[1].rstrip("]") if "[" in h else "" for h in header
        ]
        rows = [ln.split(",") for ln in lines[1:]]
        if not rows:
            raise EmptyInput(f"{path}: no data rows")
        bad = [r for r in rows if len(r) != len(header)]
        if bad:
            raise SchemaMismatch(f"{path}: row width differs from header")
        self._cols = {name: [r[i] for r in rows] for i, name in enumerate(self.names)}

    def require(self, *names):
        missing = [n for n in names if n not in self._cols]
        if missing:
            raise SchemaMismatch(
                f"{self.path}: missing column(s) {missing}; found {self.names}"
            )

    def col(self, name) -> np.ndarray:
        self.require(name)
        try:
            return np.array([float(x) for x in self._cols[name]])
        except ValueError as exc:
            raise SchemaMismatch(f"{self.path}: column {name} is not numeric: {exc}")

    def col_str(self, name) -> list:
        self.require(name)
        return list(self._cols[name])

    def label(self, name) -> str:
        self.require(name)
        return self.labels[self.names.index(name)]


def make_parser(description: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="input", required=True, help="input CSV")
    parser.add_argument("--out", dest="output", required=True, help="output image")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def save(fig, path, dpi):
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=dpi)


def run(render, argv=None) -> int:
    """Parse args, render, convert loud failures into exit status 2."""
    parser = render.parser
    args = parser.parse_args(argv)
    try:
        render(args)
    except (SchemaMismatch, EmptyInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def linear_fit(x, y):
    """Plain least-squares line, for annotation only."""
    slope, intercept = np.polyfit(np.asarray(x), np.asarray(y), 1)
    return float(slope), float(intercept)

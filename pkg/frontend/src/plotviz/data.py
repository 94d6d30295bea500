"""Readers for the two documented CSV schemas.

joint_pdf.csv (long form): bler_bin_lo, bler_bin_hi, lat_bin_lo, lat_bin_hi,
density — one row per 2-D bin, bins forming a complete rectangular grid.

training_log.csv: cycle, episode, epsilon, action_index, revenue, loss.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PlotDataError(ValueError):
    """Malformed input CSV; the message names the file and row."""


@dataclass
class JointPdfGrid:
    bler_edges: np.ndarray
    latency_edges: np.ndarray
    density: np.ndarray  # (bler_bins, latency_bins)


def _fail(path, row_num, why):
    raise PlotDataError(f"{path}: row {row_num}: {why}")


def load_joint_pdf(path: str | Path) -> JointPdfGrid:
    path = Path(path)
    cells = {}
    bler_los, lat_los = set(), set()
    edges = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["bler_bin_lo", "bler_bin_hi", "lat_bin_lo", "lat_bin_hi",
                    "density"]
        if reader.fieldnames != expected:
            _fail(path, 1, f"expected header {','.join(expected)}")
        for row_num, row in enumerate(reader, start=2):
            try:
                blo, bhi = float(row["bler_bin_lo"]), float(row["bler_bin_hi"])
                llo, lhi = float(row["lat_bin_lo"]), float(row["lat_bin_hi"])
                dens = float(row["density"])
            except (TypeError, ValueError):
                _fail(path, row_num, "non-numeric field")
            if bhi <= blo or lhi <= llo:
                _fail(path, row_num, "bin edges not increasing")
            if dens < 0:
                _fail(path, row_num, "negative density")
            key = (blo, llo)
            if key in cells:
                _fail(path, row_num, "duplicate bin")
            cells[key] = dens
            bler_los.add(blo)
            lat_los.add(llo)
            edges[("b", blo)] = bhi
            edges[("l", llo)] = lhi
    if not cells:
        _fail(path, 2, "no bins")
    b_los = sorted(bler_los)
    l_los = sorted(lat_los)
    if len(cells) != len(b_los) * len(l_los):
        _fail(path, 2, "bins do not form a complete grid")
    density = np.empty((len(b_los), len(l_los)))
    for i, blo in enumerate(b_los):
        for j, llo in enumerate(l_los):
            if (blo, llo) not in cells:
                _fail(path, 2, "bins do not form a complete grid")
            density[i, j] = cells[(blo, llo)]
    bler_edges = np.array(b_los + [edges[("b", b_los[-1])]])
    latency_edges = np.array(l_los + [edges[("l", l_los[-1])]])
    return JointPdfGrid(bler_edges, latency_edges, density)


def load_training_log(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (cycles, revenues) from a training log."""
    path = Path(path)
    cycles, revenues = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"cycle", "revenue"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            _fail(path, 1, "expected columns cycle and revenue")
        for row_num, row in enumerate(reader, start=2):
            try:
                cycles.append(int(row["cycle"]))
                revenues.append(float(row["revenue"]))
            except (TypeError, ValueError):
                _fail(path, row_num, "non-numeric field")
    if not cycles:
        _fail(path, 2, "log has no rows")
    return np.asarray(cycles), np.asarray(revenues)


def moving_average(values: np.ndarray, window: int = 100) -> np.ndarray:
    """Trailing mean over up to `window` preceding points (inclusive)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    values = np.asarray(values, dtype=np.float64)
    csum = np.concatenate([[0.0], np.cumsum(values)])
    n = len(values)
    idx = np.arange(n)
    lo = np.maximum(idx - window + 1, 0)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)

"""Per-packet records, the BLER/latency joint PDF, and file export.

All floats are serialized with 17 significant digits so outputs round-trip
bit-exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(slots=True)
class PacketRecord:
    link_id: int
    slice_id: str
    arrival_tti: int
    outcome: str  # "delivered" or "dropped"
    latency_ms: int | None
    size_bits: int


@dataclass(slots=True)
class JointPdf:
    bler_edges: np.ndarray
    latency_edges: np.ndarray
    density: np.ndarray  # shape (bler_bins, latency_bins)
    empty: bool


def per_vue_bler(attempts: int, failures: int) -> float:
    """Attempt-level block error ratio for one VUE; 0 when it never transmitted."""
    if not (attempts >= failures >= 0):
        raise ValueError("need attempts >= failures >= 0")
    return failures / attempts if attempts else 0.0


def joint_pdf(samples: list[tuple[float, float]], bler_edges: np.ndarray,
              latency_edges: np.ndarray) -> JointPdf:
    """2-D histogram of (per-VUE BLER, delivered-packet latency) pairs,
    normalized so that sum(density * bin_area) = 1 over in-range samples."""
    bler_edges = np.asarray(bler_edges, dtype=np.float64)
    latency_edges = np.asarray(latency_edges, dtype=np.float64)
    if len(bler_edges) < 2 or len(latency_edges) < 2:
        raise ValueError("need at least one bin per axis")
    shape = (len(bler_edges) - 1, len(latency_edges) - 1)
    if not samples:
        return JointPdf(bler_edges, latency_edges, np.zeros(shape), empty=True)
    arr = np.asarray(samples, dtype=np.float64)
    hist, _, _ = np.histogram2d(arr[:, 0], arr[:, 1],
                                bins=[bler_edges, latency_edges])
    count = hist.sum()
    if count == 0:
        return JointPdf(bler_edges, latency_edges, np.zeros(shape), empty=True)
    areas = (np.diff(bler_edges)[:, None] * np.diff(latency_edges)[None, :])
    return JointPdf(bler_edges, latency_edges, hist / (count * areas), empty=False)


def write_packets_csv(records: list[PacketRecord], path: Path):
    lines = ["link_id,slice_id,arrival_tti,outcome,latency_ms,size_bits"]
    for r in records:
        lat = "" if r.latency_ms is None else str(r.latency_ms)
        lines.append(f"{r.link_id},{r.slice_id},{r.arrival_tti},{r.outcome},"
                     f"{lat},{r.size_bits}")
    path.write_text("\n".join(lines) + "\n")


def write_joint_pdf_csv(pdf: JointPdf, path: Path):
    lines = ["bler_bin_lo,bler_bin_hi,lat_bin_lo,lat_bin_hi,density"]
    for i in range(pdf.density.shape[0]):
        for j in range(pdf.density.shape[1]):
            lines.append(",".join([
                fmt(pdf.bler_edges[i]), fmt(pdf.bler_edges[i + 1]),
                fmt(pdf.latency_edges[j]), fmt(pdf.latency_edges[j + 1]),
                fmt(pdf.density[i, j]),
            ]))
    path.write_text("\n".join(lines) + "\n")


def _round17(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round17(v) for v in obj]
    return obj


def export(records: list[PacketRecord], pdf: JointPdf, summary: dict,
           out_dir: str | Path):
    """Write packets.csv, joint_pdf.csv and summary.json into out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_packets_csv(records, out / "packets.csv")
        write_joint_pdf_csv(pdf, out / "joint_pdf.csv")
        (out / "summary.json").write_text(
            json.dumps(_round17(summary), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write metrics files under {out}: {exc}") from exc

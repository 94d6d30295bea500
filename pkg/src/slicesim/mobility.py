"""Manhattan-grid VUE mobility.

Vehicles live on a torus of streets: one horizontal street per block row
(at y = j*block_h) and one vertical street per block column (x = i*block_w),
each with a driving lane per direction offset by `lane_offset` from the
street centerline. Transmitters turn at intersections with probability
0.5 straight / 0.25 left / 0.25 right; each receiver replays its
transmitter's turn decisions, so it stays a fixed gap behind on the same
path.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import SLICES, ConfigError, FleetConfig, GridConfig

HORIZONTAL = 0
VERTICAL = 1

STRAIGHT, LEFT, RIGHT = 0, 1, 2

# heading unit vectors keyed by (orientation, direction)
_HEADINGS = {
    (HORIZONTAL, 1): "+x",
    (HORIZONTAL, -1): "-x",
    (VERTICAL, 1): "+y",
    (VERTICAL, -1): "-y",
}


@dataclass(slots=True)
class RoadGrid:
    blocks_x: int
    blocks_y: int
    block_w: float
    block_h: float
    lane_offset: float

    @classmethod
    def from_config(cls, g: GridConfig) -> "RoadGrid":
        return cls(g.blocks_x, g.blocks_y, g.block_w, g.block_h, g.lane_offset)

    @property
    def width(self) -> float:
        return self.blocks_x * self.block_w

    @property
    def height(self) -> float:
        return self.blocks_y * self.block_h

    def wrap_dx(self, dx):
        w = self.width
        return (np.asarray(dx) + 0.5 * w) % w - 0.5 * w

    def wrap_dy(self, dy):
        h = self.height
        return (np.asarray(dy) + 0.5 * h) % h - 0.5 * h

    def distance(self, p, q) -> float:
        """Torus (minimum-image) Euclidean distance."""
        return float(np.hypot(self.wrap_dx(p[0] - q[0]), self.wrap_dy(p[1] - q[1])))


@dataclass(slots=True)
class Vehicle:
    id: int
    pos: tuple[float, float]
    heading: str  # one of +x, -x, +y, -y
    speed: float
    slice_id: str
    pair_id: int
    is_tx: bool


@dataclass(slots=True)
class DensityGrid:
    cells: np.ndarray  # shape (cells_y, cells_x), row 0 = north (max y)
    cell_w: float
    cell_h: float


class Fleet:
    """Struct-of-arrays vehicle state; the per-TTI step is vectorized."""

    def __init__(self, grid: RoadGrid, speed: float, n_pairs: dict[str, int],
                 pair_gap: float, rng: np.random.Generator):
        total_pairs = sum(n_pairs.values())
        if total_pairs < 1:
            raise ConfigError("fleet: at least one VUE pair is required")
        n = 2 * total_pairs
        self.grid = grid
        self.speed = float(speed)
        self.pair_gap = float(pair_gap)
        self.n_pairs = total_pairs
        self.orient = np.empty(n, dtype=np.int8)
        self.street = np.empty(n, dtype=np.int32)
        self.along = np.empty(n, dtype=np.float64)
        self.direction = np.empty(n, dtype=np.int8)
        self.slice_idx = np.empty(n, dtype=np.int8)  # index into SLICES
        self.is_tx = np.zeros(n, dtype=bool)
        self.pair_id = np.empty(n, dtype=np.int32)
        # pending turn decisions recorded by each tx, replayed by its rx
        self.pending_turns: list[deque] = [deque() for _ in range(total_pairs)]

        pair = 0
        for s_idx, slice_id in enumerate(SLICES):
            for _ in range(n_pairs.get(slice_id, 0)):
                self._place_pair(pair, s_idx, rng)
                pair += 1

    def _place_pair(self, pair: int, s_idx: int, rng: np.random.Generator):
        g = self.grid
        # pick a street weighted by its length
        lengths = [g.width] * g.blocks_y + [g.height] * g.blocks_x
        total = float(sum(lengths))
        r = rng.random() * total
        acc = 0.0
        choice = 0
        for k, ln in enumerate(lengths):
            acc += ln
            if r < acc:
                choice = k
                break
        if choice < g.blocks_y:
            orient, street, length = HORIZONTAL, choice, g.width
        else:
            orient, street, length = VERTICAL, choice - g.blocks_y, g.height
        direction = 1 if rng.random() < 0.5 else -1
        along = rng.random() * length
        tx, rx = 2 * pair, 2 * pair + 1
        for idx, a in ((tx, along), (rx, (along - direction * self.pair_gap) % length)):
            self.orient[idx] = orient
            self.street[idx] = street
            self.along[idx] = a % length
            self.direction[idx] = direction
            self.slice_idx[idx] = s_idx
            self.pair_id[idx] = pair
        self.is_tx[tx] = True

    # -- geometry ----------------------------------------------------------

    def positions(self) -> np.ndarray:
        """(n, 2) xy positions on the directional lane centerlines."""
        g = self.grid
        n = len(self.orient)
        xy = np.empty((n, 2))
        h_mask = self.orient == HORIZONTAL
        off = self.direction * g.lane_offset
        # +x traffic keeps the south lane, +y traffic keeps the east lane
        xy[h_mask, 0] = self.along[h_mask]
        xy[h_mask, 1] = (self.street[h_mask] * g.block_h - off[h_mask]) % g.height
        v_mask = ~h_mask
        xy[v_mask, 0] = (self.street[v_mask] * g.block_w + off[v_mask]) % g.width
        xy[v_mask, 1] = self.along[v_mask]
        return xy

    def vehicles(self) -> list[Vehicle]:
        xy = self.positions()
        out = []
        for i in range(len(self.orient)):
            out.append(Vehicle(
                id=i,
                pos=(float(xy[i, 0]), float(xy[i, 1])),
                heading=_HEADINGS[(int(self.orient[i]), int(self.direction[i]))],
                speed=self.speed,
                slice_id=SLICES[self.slice_idx[i]],
                pair_id=int(self.pair_id[i]),
                is_tx=bool(self.is_tx[i]),
            ))
        return out

    # -- dynamics ----------------------------------------------------------

    def step(self, dt: float, rng: np.random.Generator):
        """Advance all vehicles by speed*dt, handling intersection turns."""
        if dt < 0:
            raise ValueError("dt must be >= 0")
        if dt == 0:
            return
        g = self.grid
        delta = self.speed * dt
        spacing = np.where(self.orient == HORIZONTAL, g.block_w, g.block_h)
        length = np.where(self.orient == HORIZONTAL, g.width, g.height)
        frac = self.along % spacing
        fwd = self.direction > 0
        crossing = np.where(fwd, frac + delta >= spacing, delta >= frac)
        # at most one intersection per step (delta << block size in practice)
        plain = ~crossing
        self.along[plain] = (self.along[plain]
                             + self.direction[plain] * delta) % length[plain]
        for i in np.flatnonzero(crossing):
            self._cross(int(i), delta, rng)

    def _cross(self, i: int, delta: float, rng: np.random.Generator):
        g = self.grid
        horizontal = self.orient[i] == HORIZONTAL
        spacing = g.block_w if horizontal else g.block_h
        length = g.width if horizontal else g.height
        n_cross = g.blocks_x if horizontal else g.blocks_y
        frac = self.along[i] % spacing
        if self.direction[i] > 0:
            boundary = self.along[i] - frac + spacing
            overshoot = frac + delta - spacing
        else:
            boundary = self.along[i] - frac
            overshoot = delta - frac
        k = int(round(boundary / spacing)) % n_cross

        if self.is_tx[i]:
            u = rng.random()
            turn = STRAIGHT if u < 0.5 else (LEFT if u < 0.75 else RIGHT)
            self.pending_turns[self.pair_id[i]].append(turn)
        else:
            q = self.pending_turns[self.pair_id[i]]
            turn = q.popleft() if q else STRAIGHT

        if turn == STRAIGHT:
            self.along[i] = (boundary + self.direction[i] * overshoot) % length
            return
        # rotate heading: left = CCW, right = CW
        hx, hy = ((self.direction[i], 0) if horizontal else (0, self.direction[i]))
        nhx, nhy = (-hy, hx) if turn == LEFT else (hy, -hx)
        if horizontal:
            # onto the crossing vertical street k, starting at the intersection's y
            inter_y = self.street[i] * g.block_h
            self.orient[i] = VERTICAL
            self.street[i] = k
            self.direction[i] = 1 if nhy > 0 else -1
            self.along[i] = (inter_y + self.direction[i] * overshoot) % g.height
        else:
            inter_x = self.street[i] * g.block_w
            self.orient[i] = HORIZONTAL
            self.street[i] = k
            self.direction[i] = 1 if nhx > 0 else -1
            self.along[i] = (inter_x + self.direction[i] * overshoot) % g.width


def build_grid(grid_cfg: GridConfig, fleet_cfg: FleetConfig,
               rng: np.random.Generator) -> tuple[RoadGrid, Fleet]:
    """Create the road grid and place the paired fleet; deterministic per rng."""
    grid = RoadGrid.from_config(grid_cfg)
    fleet = Fleet(
        grid,
        speed=fleet_cfg.speed_mps,
        n_pairs={"safety": fleet_cfg.pairs_safety,
                 "autonomous": fleet_cfg.pairs_autonomous},
        pair_gap=fleet_cfg.pair_gap_m,
        rng=rng,
    )
    return grid, fleet


def step_mobility(fleet: Fleet, dt: float, rng: np.random.Generator) -> Fleet:
    """Advance the fleet in place by dt seconds (returned for convenience)."""
    fleet.step(dt, rng)
    return fleet


def density_snapshot(positions: np.ndarray, grid: RoadGrid,
                     cells_x: int, cells_y: int) -> DensityGrid:
    """Count vehicles per rectangular cell; cell (0,0) is the north-west corner."""
    if cells_x < 1 or cells_y < 1:
        raise ValueError("cell counts must be >= 1")
    positions = np.asarray(positions).reshape(-1, 2)
    cell_w = grid.width / cells_x
    cell_h = grid.height / cells_y
    cells = np.zeros((cells_y, cells_x), dtype=np.int64)
    if len(positions):
        cx = np.clip((positions[:, 0] % grid.width) // cell_w, 0, cells_x - 1).astype(int)
        # row 0 = north: invert the y index
        cy = np.clip((positions[:, 1] % grid.height) // cell_h, 0, cells_y - 1).astype(int)
        np.add.at(cells, (cells_y - 1 - cy, cx), 1)
    return DensityGrid(cells=cells, cell_w=cell_w, cell_h=cell_h)


def _wrap(d: float, span: float) -> float:
    return (d + 0.5 * span) % span - 0.5 * span


def _dist(p, q, w: float, h: float) -> float:
    return math.hypot(_wrap(p[0] - q[0], w), _wrap(p[1] - q[1], h))


def _streets_of(x: float, y: float, grid: RoadGrid, tol: float):
    """Indices of horizontal / vertical streets whose lane band contains (x, y)."""
    w, h = grid.width, grid.height
    hs = [j for j in range(grid.blocks_y)
          if abs(_wrap(y - j * grid.block_h, h)) <= tol]
    vs = [i for i in range(grid.blocks_x)
          if abs(_wrap(x - i * grid.block_w, w)) <= tol]
    return hs, vs


def link_geometry(tx_pos: tuple[float, float], rx_pos: tuple[float, float],
                  grid: RoadGrid) -> tuple[bool, float, float]:
    """LOS flag and along-street distances (d1, d2) for the pathloss model.

    LOS when both endpoints share a street; then d1 is the direct distance
    and d2 = 0. NLOS picks the connecting corner minimizing d1 + d2; for
    endpoints on parallel streets the best two-corner path is used, with d2
    covering everything past the first corner.
    """
    tol = grid.lane_offset + 0.5
    w, h = grid.width, grid.height
    txh, txv = _streets_of(*tx_pos, grid, tol)
    rxh, rxv = _streets_of(*rx_pos, grid, tol)
    if set(txh) & set(rxh) or set(txv) & set(rxv):
        return True, _dist(tx_pos, rx_pos, w, h), 0.0

    best = None
    for j in txh:
        for i in rxv:
            corner = (i * grid.block_w, j * grid.block_h)
            cand = (_dist(tx_pos, corner, w, h), _dist(corner, rx_pos, w, h))
            if best is None or sum(cand) < sum(best):
                best = cand
    for i in txv:
        for j in rxh:
            corner = (i * grid.block_w, j * grid.block_h)
            cand = (_dist(tx_pos, corner, w, h), _dist(corner, rx_pos, w, h))
            if best is None or sum(cand) < sum(best):
                best = cand
    if best is None:
        # parallel streets: route via the best perpendicular street
        if txh and rxh:
            for i in range(grid.blocks_x):
                for j1 in txh:
                    for j2 in rxh:
                        c1 = (i * grid.block_w, j1 * grid.block_h)
                        c2 = (i * grid.block_w, j2 * grid.block_h)
                        cand = (_dist(tx_pos, c1, w, h),
                                _dist(c1, c2, w, h) + _dist(c2, rx_pos, w, h))
                        if best is None or sum(cand) < sum(best):
                            best = cand
        elif txv and rxv:
            for j in range(grid.blocks_y):
                for i1 in txv:
                    for i2 in rxv:
                        c1 = (i1 * grid.block_w, j * grid.block_h)
                        c2 = (i2 * grid.block_w, j * grid.block_h)
                        cand = (_dist(tx_pos, c1, w, h),
                                _dist(c1, c2, w, h) + _dist(c2, rx_pos, w, h))
                        if best is None or sum(cand) < sum(best):
                            best = cand
    if best is None:
        # off-street endpoint; fall back to the direct distance as NLOS
        return False, _dist(tx_pos, rx_pos, w, h), 0.0
    return False, best[0], best[1]

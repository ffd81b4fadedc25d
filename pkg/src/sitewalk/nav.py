"""Occupancy grid construction and grid path search.

The grid rasterizes the walkable region: a cell is walkable iff its center
lies in the region. Search is 8-connected A* with unit straight cost and
sqrt(2) diagonal cost. Costs are tracked as integer (straight, diagonal)
step counts and only converted to floats as `s + d*sqrt(2)`, which makes
optimal costs reproducible bit-for-bit against any exact oracle on the
same grid.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import NoPathError, ResolutionError, SnapError
from .model import WalkableRegion

SQRT2 = math.sqrt(2.0)

MAX_CELLS = 10_000_000
DEFAULT_CELL_SIZE = 0.1
SNAP_RADIUS = 0.5

# dx, dy, diagonal flag; order fixed for deterministic expansion
_NEIGHBORS = (
    (1, 0, False), (-1, 0, False), (0, 1, False), (0, -1, False),
    (1, 1, True), (1, -1, True), (-1, 1, True), (-1, -1, True),
)


@dataclass
class NavGrid:
    origin: tuple[float, float]
    cell_size: float
    occupancy: np.ndarray  # bool [height, width], True = walkable

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.occupancy = np.asarray(self.occupancy, dtype=bool)

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.origin[0] + (ix + 0.5) * self.cell_size,
                self.origin[1] + (iy + 0.5) * self.cell_size)

    def point_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((x - self.origin[0]) / self.cell_size)),
                int(math.floor((y - self.origin[1]) / self.cell_size)))

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_walkable(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and bool(self.occupancy[iy, ix])

    def snap_point(self, x: float, y: float,
                   max_snap: float = SNAP_RADIUS) -> tuple[int, int]:
        """Nearest walkable cell (by center distance) within `max_snap` meters.

        Ties break by (iy, ix) so snapping is deterministic.
        """
        ix0, iy0 = self.point_to_cell(x, y)
        reach = int(math.ceil(max_snap / self.cell_size)) + 1
        best: tuple[float, int, int] | None = None
        for iy in range(max(0, iy0 - reach), min(self.height, iy0 + reach + 1)):
            for ix in range(max(0, ix0 - reach), min(self.width, ix0 + reach + 1)):
                if not self.occupancy[iy, ix]:
                    continue
                cx, cy = self.cell_center(ix, iy)
                d = math.hypot(cx - x, cy - y)
                if d <= max_snap and (best is None or (d, iy, ix) < best):
                    best = (d, iy, ix)
        if best is None:
            raise SnapError(
                f"no walkable cell within {max_snap} m of ({x:.3f}, {y:.3f})")
        return (best[2], best[1])

    def segment_walkable(self, p1: tuple[float, float],
                         p2: tuple[float, float]) -> bool:
        """Line-of-sight check: sample the segment at half-cell spacing and
        require every sample to land in a walkable cell."""
        dist = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
        n = max(1, math.ceil(dist / (self.cell_size / 2.0)))
        for i in range(n + 1):
            t = i / n
            x = p1[0] + t * (p2[0] - p1[0])
            y = p1[1] + t * (p2[1] - p1[1])
            ix, iy = self.point_to_cell(x, y)
            if not self.is_walkable(ix, iy):
                return False
        return True

    def walkable_cell_count(self) -> int:
        return int(self.occupancy.sum())


@dataclass
class Path:
    """A polyline of corner waypoints plus its length in meters.

    `grid_cost` is the pre-smoothing optimal grid cost (meters); `grid_points`
    are the raw cell centers the search produced, kept for verification.
    """

    waypoints: tuple[tuple[float, float], ...]
    length: float = field(init=False)
    grid_cost: float = 0.0
    grid_points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        total = 0.0
        for (x1, y1), (x2, y2) in zip(self.waypoints, self.waypoints[1:]):
            total += math.hypot(x2 - x1, y2 - y1)
        self.length = total


def build_nav_grid(region: WalkableRegion,
                   cell_size: float = DEFAULT_CELL_SIZE) -> NavGrid:
    """Rasterize the region bounds onto an occupancy grid."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    x0, y0, x1, y1 = region.bounds
    width = max(1, int(math.ceil((x1 - x0) / cell_size)))
    height = max(1, int(math.ceil((y1 - y0) / cell_size)))
    if width * height > MAX_CELLS:
        raise ResolutionError(
            f"{width} x {height} cells exceeds the {MAX_CELLS} cell budget")

    xs = x0 + (np.arange(width) + 0.5) * cell_size
    ys = y0 + (np.arange(height) + 0.5) * cell_size
    xx, yy = np.meshgrid(xs, ys)

    inside = np.zeros(xx.shape, dtype=bool)
    for poly in region.floors:
        inside |= geometry.points_in_polygon_array(xx, yy, poly)

    blocked = np.zeros(xx.shape, dtype=bool)
    for poly in region.obstacles:
        blocked |= geometry.points_within_polygon_distance(
            xx, yy, poly, region.robot_radius)

    return NavGrid(origin=(x0, y0), cell_size=cell_size,
                   occupancy=inside & ~blocked)


def grid_search(grid: NavGrid, start: tuple[int, int], goal: tuple[int, int]
                ) -> tuple[float, list[tuple[int, int]]] | None:
    """A* from start cell to goal cell.

    Returns (optimal cost in cell units, cell path) or None when unreachable.
    Diagonal steps are allowed only when both adjacent cardinal cells are
    walkable, so paths cannot cut wall corners.
    """
    if not grid.is_walkable(*start) or not grid.is_walkable(*goal):
        return None
    width = grid.width
    occ = grid.occupancy

    def h(ix: int, iy: int) -> float:
        dx = abs(ix - goal[0])
        dy = abs(iy - goal[1])
        lo, hi = (dx, dy) if dx < dy else (dy, dx)
        return (hi - lo) + lo * SQRT2

    start_idx = start[1] * width + start[0]
    goal_idx = goal[1] * width + goal[0]
    # g-cost as (straight, diagonal) integer step counts
    g_steps: dict[int, tuple[int, int]] = {start_idx: (0, 0)}
    g_val: dict[int, float] = {start_idx: 0.0}
    parent: dict[int, int] = {}
    counter = 0
    open_heap: list[tuple[float, int, int]] = [(h(*start), counter, start_idx)]
    closed: set[int] = set()

    while open_heap:
        _, _, idx = heapq.heappop(open_heap)
        if idx in closed:
            continue
        if idx == goal_idx:
            break
        closed.add(idx)
        ix, iy = idx % width, idx // width
        s0, d0 = g_steps[idx]
        for dx, dy, diag in _NEIGHBORS:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < width and 0 <= ny < grid.height):
                continue
            if not occ[ny, nx]:
                continue
            if diag and not (occ[iy, nx] and occ[ny, ix]):
                continue
            nidx = ny * width + nx
            if nidx in closed:
                continue
            steps = (s0, d0 + 1) if diag else (s0 + 1, d0)
            val = steps[0] + steps[1] * SQRT2
            if val < g_val.get(nidx, math.inf):
                g_steps[nidx] = steps
                g_val[nidx] = val
                parent[nidx] = idx
                counter += 1
                heapq.heappush(open_heap, (val + h(nx, ny), counter, nidx))
    else:
        return None

    if goal_idx not in g_val:
        return None
    cells: list[tuple[int, int]] = []
    idx = goal_idx
    while True:
        cells.append((idx % width, idx // width))
        if idx == start_idx:
            break
        idx = parent[idx]
    cells.reverse()
    return g_val[goal_idx], cells


def grid_distances_from(grid: NavGrid, start: tuple[int, int],
                        goals: set[tuple[int, int]]) -> dict[tuple[int, int], float]:
    """Uniform-cost search from one cell to many goal cells.

    Returns cell-unit costs for every reachable goal; missing keys mean
    unreachable. Stops early once all goals are settled.
    """
    width = grid.width
    occ = grid.occupancy
    goal_idxs = {g[1] * width + g[0] for g in goals if grid.is_walkable(*g)}
    result: dict[tuple[int, int], float] = {}
    if not grid.is_walkable(*start):
        return result

    start_idx = start[1] * width + start[0]
    g_steps: dict[int, tuple[int, int]] = {start_idx: (0, 0)}
    g_val: dict[int, float] = {start_idx: 0.0}
    counter = 0
    open_heap: list[tuple[float, int, int]] = [(0.0, counter, start_idx)]
    closed: set[int] = set()
    pending = set(goal_idxs)

    while open_heap and pending:
        val, _, idx = heapq.heappop(open_heap)
        if idx in closed:
            continue
        closed.add(idx)
        if idx in pending:
            pending.discard(idx)
            result[(idx % width, idx // width)] = g_val[idx]
        ix, iy = idx % width, idx // width
        s0, d0 = g_steps[idx]
        for dx, dy, diag in _NEIGHBORS:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < width and 0 <= ny < grid.height):
                continue
            if not occ[ny, nx]:
                continue
            if diag and not (occ[iy, nx] and occ[ny, ix]):
                continue
            nidx = ny * width + nx
            if nidx in closed:
                continue
            steps = (s0, d0 + 1) if diag else (s0 + 1, d0)
            nval = steps[0] + steps[1] * SQRT2
            if nval < g_val.get(nidx, math.inf):
                g_steps[nidx] = steps
                g_val[nidx] = nval
                counter += 1
                heapq.heappush(open_heap, (nval, counter, nidx))
    return result


def smooth_path(grid: NavGrid, points: list[tuple[float, float]]
                ) -> list[tuple[float, float]]:
    """Greedy string pulling: keep only corners that line-of-sight requires."""
    if len(points) <= 2:
        return list(points)
    smoothed = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not grid.segment_walkable(points[i], points[j]):
            j -= 1
        smoothed.append(points[j])
        i = j
    return smoothed


def shortest_path(grid: NavGrid, start: tuple[float, float],
                  goal: tuple[float, float]) -> Path:
    """Optimal grid path from start to goal, smoothed into corner waypoints.

    Both endpoints snap to the nearest walkable cell center within the snap
    radius. Raises NoPathError when the cells are in different components.
    """
    start_cell = grid.snap_point(*start)
    goal_cell = grid.snap_point(*goal)
    if start_cell == goal_cell:
        center = grid.cell_center(*start_cell)
        return Path(waypoints=(center,), grid_cost=0.0, grid_points=(center,))

    found = grid_search(grid, start_cell, goal_cell)
    if found is None:
        raise NoPathError(
            f"no walkable route from {start} to {goal}")
    cost_cells, cells = found
    centers = [grid.cell_center(ix, iy) for ix, iy in cells]
    smoothed = smooth_path(grid, centers)
    return Path(waypoints=tuple(smoothed),
                grid_cost=cost_cells * grid.cell_size,
                grid_points=tuple(centers))

"""Building model loading, validation, and walkable-region extraction.

The model file is a UTF-8 JSON document:

    {
      "units": "m",
      "bounds": [x0, y0, x1, y1],
      "elements": [{"id", "layer", "footprint": [[x, y], ...], "height"}],
      "fiducials": [{"id", "pose": {"x", "y", "theta"}, "orientation_error": 0.0}]
    }

Angles are radians. Layers are wall/floor/door/furniture/other. Walls and
furniture block travel; doors never do, so doorways stay passable.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Union

import numpy as np

from . import geometry
from .errors import EmptyRegionError, ParseError, ValidationError
from .frames import Pose2D

DEFAULT_ROBOT_RADIUS = 0.3

# cell edge used when estimating subtracted obstacle area
AREA_RASTER_CELL = 0.05


class Layer(str, Enum):
    WALL = "wall"
    FLOOR = "floor"
    DOOR = "door"
    FURNITURE = "furniture"
    OTHER = "other"


# layers whose footprints are subtracted from the walkable region
BLOCKING_LAYERS = (Layer.WALL, Layer.FURNITURE)


@dataclass(frozen=True)
class Element:
    id: str
    layer: Layer
    footprint: tuple[tuple[float, float], ...]
    height: float = 0.0


@dataclass(frozen=True)
class FiducialSpec:
    id: str
    pose: Pose2D
    orientation_error: float = 0.0


@dataclass(frozen=True)
class BuildingModel:
    units: str
    bounds: tuple[float, float, float, float]
    elements: tuple[Element, ...]
    fiducials: tuple[FiducialSpec, ...]

    def elements_in_layer(self, layer: Layer) -> list[Element]:
        return [e for e in self.elements if e.layer == layer]

    def blocking_elements(self) -> list[Element]:
        return [e for e in self.elements if e.layer in BLOCKING_LAYERS]

    def fiducial_by_id(self, fiducial_id: str) -> FiducialSpec:
        for f in self.fiducials:
            if f.id == fiducial_id:
                return f
        raise KeyError(fiducial_id)


def load_building_model(document: Union[bytes, str, BinaryIO]) -> BuildingModel:
    """Parse and validate a building-model document.

    Raises ParseError for malformed JSON/schema, ValidationError (naming the
    offending element id) for invariant violations.
    """
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not UTF-8: {exc}") from None
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("top-level value must be an object")

    units = raw.get("units")
    if units != "m":
        raise ParseError(f"unsupported units {units!r}; expected 'm'")

    bounds = raw.get("bounds")
    if (not isinstance(bounds, (list, tuple)) or len(bounds) != 4
            or not all(isinstance(v, (int, float)) for v in bounds)):
        raise ParseError("bounds must be [x0, y0, x1, y1]")
    x0, y0, x1, y1 = (float(v) for v in bounds)
    if x1 <= x0 or y1 <= y0:
        raise ParseError("bounds rectangle is empty or inverted")

    elements = []
    seen_ids: set[str] = set()
    for entry in raw.get("elements", []):
        elements.append(_parse_element(entry, (x0, y0, x1, y1), seen_ids))

    fiducials = []
    fid_ids: set[str] = set()
    for entry in raw.get("fiducials", []):
        fiducials.append(_parse_fiducial(entry, (x0, y0, x1, y1), fid_ids))

    return BuildingModel(
        units="m",
        bounds=(x0, y0, x1, y1),
        elements=tuple(elements),
        fiducials=tuple(fiducials),
    )


def _parse_element(entry: dict, bounds: tuple[float, float, float, float],
                   seen_ids: set[str]) -> Element:
    if not isinstance(entry, dict):
        raise ParseError("element entries must be objects")
    element_id = entry.get("id")
    if not isinstance(element_id, str) or not element_id:
        raise ParseError("element id must be a non-empty string")
    if element_id in seen_ids:
        raise ValidationError(f"duplicate element id {element_id!r}", element_id)
    seen_ids.add(element_id)

    try:
        layer = Layer(entry.get("layer"))
    except ValueError:
        raise ValidationError(
            f"element {element_id!r} has unknown layer {entry.get('layer')!r}",
            element_id) from None

    footprint_raw = entry.get("footprint")
    if not isinstance(footprint_raw, list) or len(footprint_raw) < 3:
        raise ValidationError(
            f"element {element_id!r} footprint needs at least 3 vertices",
            element_id)
    footprint = []
    for vertex in footprint_raw:
        if (not isinstance(vertex, (list, tuple)) or len(vertex) != 2
                or not all(isinstance(v, (int, float)) for v in vertex)):
            raise ValidationError(
                f"element {element_id!r} has a malformed vertex", element_id)
        footprint.append((float(vertex[0]), float(vertex[1])))

    x0, y0, x1, y1 = bounds
    for vx, vy in footprint:
        if not (x0 <= vx <= x1 and y0 <= vy <= y1):
            raise ValidationError(
                f"element {element_id!r} vertex ({vx}, {vy}) lies outside bounds",
                element_id)
    if not geometry.is_simple_polygon(footprint):
        raise ValidationError(
            f"element {element_id!r} footprint is self-intersecting", element_id)

    height = entry.get("height", 0.0)
    if not isinstance(height, (int, float)) or height < 0:
        raise ValidationError(
            f"element {element_id!r} height must be nonnegative", element_id)

    return Element(id=element_id, layer=layer, footprint=tuple(footprint),
                   height=float(height))


def _parse_fiducial(entry: dict, bounds: tuple[float, float, float, float],
                    fid_ids: set[str]) -> FiducialSpec:
    if not isinstance(entry, dict):
        raise ParseError("fiducial entries must be objects")
    fid = entry.get("id")
    if not isinstance(fid, str) or not fid:
        raise ParseError("fiducial id must be a non-empty string")
    if fid in fid_ids:
        raise ValidationError(f"duplicate fiducial id {fid!r}", fid)
    fid_ids.add(fid)

    pose_raw = entry.get("pose")
    if not isinstance(pose_raw, dict):
        raise ValidationError(f"fiducial {fid!r} pose must be an object", fid)
    try:
        pose = Pose2D(float(pose_raw["x"]), float(pose_raw["y"]),
                      float(pose_raw["theta"]))
    except (KeyError, TypeError, ValueError):
        raise ValidationError(f"fiducial {fid!r} pose needs x, y, theta", fid) from None

    x0, y0, x1, y1 = bounds
    if not (x0 <= pose.x <= x1 and y0 <= pose.y <= y1):
        raise ValidationError(f"fiducial {fid!r} lies outside bounds", fid)

    err = entry.get("orientation_error", 0.0)
    if not isinstance(err, (int, float)) or abs(err) >= math.pi / 2:
        raise ValidationError(
            f"fiducial {fid!r} orientation_error must satisfy |e| < pi/2", fid)

    return FiducialSpec(id=fid, pose=pose, orientation_error=float(err))


def dump_building_model(model: BuildingModel) -> str:
    """Serialize back to the canonical file schema (load/dump round-trips)."""
    doc = {
        "units": model.units,
        "bounds": list(model.bounds),
        "elements": [
            {
                "id": e.id,
                "layer": e.layer.value,
                "footprint": [[x, y] for x, y in e.footprint],
                "height": e.height,
            }
            for e in model.elements
        ],
        "fiducials": [
            {
                "id": f.id,
                "pose": {"x": f.pose.x, "y": f.pose.y, "theta": f.pose.theta},
                "orientation_error": f.orientation_error,
            }
            for f in model.fiducials
        ],
    }
    return json.dumps(doc, indent=2)


@dataclass
class WalkableRegion:
    """Floor area minus blocking footprints inflated by the robot radius.

    Membership is evaluated point-wise (floors in, inflated obstacles out)
    rather than via exact polygon booleans; grid rasterization downstream
    bounds the error by the cell size.
    """

    floors: tuple[tuple[tuple[float, float], ...], ...]
    obstacles: tuple[tuple[tuple[float, float], ...], ...]
    robot_radius: float
    bounds: tuple[float, float, float, float] = field(init=False)

    def __post_init__(self):
        if not self.floors:
            raise EmptyRegionError("model has no floor elements")
        self._floor_boxes = tuple(geometry.polygon_bounds(f)
                                  for f in self.floors)
        self._obstacle_boxes = tuple(geometry.polygon_bounds(o)
                                     for o in self.obstacles)
        self.bounds = (min(b[0] for b in self._floor_boxes),
                       min(b[1] for b in self._floor_boxes),
                       max(b[2] for b in self._floor_boxes),
                       max(b[3] for b in self._floor_boxes))

    def contains(self, x: float, y: float) -> bool:
        on_floor = False
        for box, floor in zip(self._floor_boxes, self.floors):
            if (box[0] <= x <= box[2] and box[1] <= y <= box[3]
                    and geometry.point_in_polygon(x, y, floor)):
                on_floor = True
                break
        if not on_floor:
            return False
        r = self.robot_radius
        for box, obs in zip(self._obstacle_boxes, self.obstacles):
            if (box[0] - r <= x <= box[2] + r and box[1] - r <= y <= box[3] + r
                    and geometry.point_polygon_distance(x, y, obs) < r):
                return False
        return True

    def clearance(self, x: float, y: float) -> float:
        """Distance to the nearest blocking footprint (inf when none)."""
        if not self.obstacles:
            return math.inf
        return min(geometry.point_polygon_distance(x, y, o) for o in self.obstacles)

    def area(self, cell: float = AREA_RASTER_CELL) -> float:
        """Region area: exact floor area minus rasterized blocked overlap.

        With no obstacles this equals the shoelace floor area exactly.
        Overlapping floor polygons are not supported by this estimate.
        """
        floor_area = sum(geometry.polygon_area(f) for f in self.floors)
        if not self.obstacles:
            return floor_area
        xx, yy, sx, sy = self._raster_centers(cell)
        on_floor = np.zeros(xx.shape, dtype=bool)
        for f in self.floors:
            on_floor |= geometry.points_in_polygon_array(xx, yy, f)
        blocked = np.zeros(xx.shape, dtype=bool)
        for obs in self.obstacles:
            blocked |= geometry.points_within_polygon_distance(
                xx, yy, obs, self.robot_radius)
        return floor_area - int((on_floor & blocked).sum()) * sx * sy

    def _raster_centers(self, cell: float):
        x0, y0, x1, y1 = self.bounds
        nx = max(1, round((x1 - x0) / cell))
        ny = max(1, round((y1 - y0) / cell))
        sx = (x1 - x0) / nx
        sy = (y1 - y0) / ny
        xs = x0 + (np.arange(nx) + 0.5) * sx
        ys = y0 + (np.arange(ny) + 0.5) * sy
        xx, yy = np.meshgrid(xs, ys)
        return xx, yy, sx, sy

    def sample_points(self, n: int, rng: random.Random,
                      max_tries: int = 100_000) -> list[tuple[float, float]]:
        """Rejection-sample n points uniformly from the region."""
        x0, y0, x1, y1 = self.bounds
        points = []
        tries = 0
        while len(points) < n and tries < max_tries:
            tries += 1
            x = rng.uniform(x0, x1)
            y = rng.uniform(y0, y1)
            if self.contains(x, y):
                points.append((x, y))
        return points


def extract_walkable_region(model: BuildingModel,
                            robot_radius: float = DEFAULT_ROBOT_RADIUS) -> WalkableRegion:
    """Derive the robot-passable region from a validated model.

    Doors are deliberately excluded from the subtraction so doorways stay
    open. Raises EmptyRegionError when nothing is walkable.
    """
    if robot_radius < 0:
        raise ValueError("robot_radius must be nonnegative")
    floors = tuple(e.footprint for e in model.elements_in_layer(Layer.FLOOR))
    obstacles = tuple(e.footprint for e in model.blocking_elements())
    region = WalkableRegion(floors=floors, obstacles=obstacles,
                            robot_radius=robot_radius)
    if region.area() <= 0 or not region.sample_points(1, random.Random(0), 20_000):
        raise EmptyRegionError("no walkable area remains after obstacle inflation")
    return region

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent.parent / "fixtures"


def make_model_doc(bounds, elements, fiducials=None) -> str:
    return json.dumps({
        "units": "m",
        "bounds": bounds,
        "elements": elements,
        "fiducials": fiducials or [],
    })


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def element(eid, layer, footprint, height=1.0):
    return {"id": eid, "layer": layer, "footprint": footprint, "height": height}


@pytest.fixture
def empty_floor_10x10() -> str:
    """A bare 10 x 10 m floor slab."""
    return make_model_doc(
        [0, 0, 10, 10],
        [element("floor1", "floor", rect(0, 0, 10, 10), height=0.0)],
    )


@pytest.fixture
def bisected_floor() -> str:
    """10 x 10 floor split by a 0.2 m wall at x in [4.9, 5.1] with a 1.0 m
    door gap centered on (5, 2)."""
    return make_model_doc(
        [0, 0, 10, 10],
        [
            element("floor1", "floor", rect(0, 0, 10, 10), height=0.0),
            element("wall_s", "wall", rect(4.9, 0, 5.1, 1.5), height=3.0),
            element("wall_n", "wall", rect(4.9, 2.5, 5.1, 10), height=3.0),
            element("door1", "door", rect(4.9, 1.5, 5.1, 2.5), height=2.1),
        ],
    )


@pytest.fixture
def bfh_model_path() -> Path:
    return FIXTURES / "bfh_approx.json"


@pytest.fixture
def bfh_drps_path() -> Path:
    return FIXTURES / "bfh_drps.json"

"""
Scene and object geometry for scripted episodes

The table is a slab whose top is at the table height, front edge at
y = TABLE_FRONT_Y, centred on x = 0. The floor is a slab whose top is at
z = 0. Objects are built centred at the origin in their rest pose.
"""

from typing import Dict

import numpy as np

from ..config import DefaultsConfig
from ..geometry import TriMesh, box, cylinder, enforce_budget, icosphere
from ..losses import Scene
from .models import Shape

TABLE_FRONT_Y = 0.2
TABLE_WIDTH = 1.2
TABLE_DEPTH = 0.8
TABLE_THICKNESS = 0.05
FLOOR_SIZE = 4.0
FLOOR_THICKNESS = 0.1

OBJECT_DIMENSIONS: Dict[Shape, Dict[str, float]] = {
    Shape.BOX: {"x": 0.20, "y": 0.10, "z": 0.15},
    Shape.CYLINDER: {"radius": 0.08, "height": 0.18},
    Shape.SPHERE: {"radius": 0.10},
}


def object_mesh(shape: Shape) -> TriMesh:
    """Rest-pose object mesh centred at the origin"""
    shape = Shape(shape)
    dims = OBJECT_DIMENSIONS[shape]
    if shape is Shape.BOX:
        mesh = box((dims["x"], dims["y"], dims["z"]), subdivisions=3, name="box")
    elif shape is Shape.CYLINDER:
        mesh = cylinder(dims["radius"], dims["height"], name="cylinder")
    else:
        mesh = icosphere(dims["radius"], subdivisions=3, name="sphere")
    return enforce_budget(mesh, max_faces=DefaultsConfig.OBJECT_FACE_BUDGET)


def half_height(mesh: TriMesh) -> float:
    lo, hi = mesh.bounds
    return float(hi[2] - lo[2]) / 2.0


def rest_position(mesh: TriMesh, table_height: float, object_y: float) -> np.ndarray:
    """Object centre resting on the table top with the configured clearance"""
    return np.array([0.0, object_y, table_height + half_height(mesh) + DefaultsConfig.OBJECT_CLEARANCE])


def build_scene(
    table_height: float = DefaultsConfig.TABLE_HEIGHT,
    floor_height: float = DefaultsConfig.FLOOR_HEIGHT,
) -> Scene:
    """Table and floor slabs"""
    table = box(
        (TABLE_WIDTH, TABLE_DEPTH, TABLE_THICKNESS),
        center=(0.0, TABLE_FRONT_Y + TABLE_DEPTH / 2.0, table_height - TABLE_THICKNESS / 2.0),
        subdivisions=2,
        name="table",
    )
    floor = box(
        (FLOOR_SIZE, FLOOR_SIZE, FLOOR_THICKNESS),
        center=(0.0, 0.0, floor_height - FLOOR_THICKNESS / 2.0),
        name="floor",
    )
    return Scene(table=table, floor=floor, floor_height=floor_height, table_height=table_height)

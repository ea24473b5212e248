"""
Triangle-mesh kernels: inside tests, nearest points, penetration and SDFs
"""

from .bvh import Bvh
from .mesh import TriMesh, enforce_budget, is_watertight, merge, require_watertight
from .obj_io import load_obj, save_obj
from .penetration import penetration_loss, penetration_term
from .queries import NearestResult, nearest_point, nearest_points, point_in_mesh, points_in_mesh
from .sdf import SdfGrid, bake_sdf, load_sdf, mesh_digest, object_sdf, query_sdf, save_sdf
from .shapes import box, capsule, cylinder, icosphere, sample_surface
from .winding import inside_by_winding, winding_numbers

__all__ = [
    "Bvh",
    "NearestResult",
    "SdfGrid",
    "TriMesh",
    "bake_sdf",
    "box",
    "capsule",
    "cylinder",
    "enforce_budget",
    "icosphere",
    "inside_by_winding",
    "is_watertight",
    "load_obj",
    "load_sdf",
    "merge",
    "mesh_digest",
    "nearest_point",
    "nearest_points",
    "object_sdf",
    "penetration_loss",
    "penetration_term",
    "point_in_mesh",
    "points_in_mesh",
    "query_sdf",
    "sample_surface",
    "save_obj",
    "save_sdf",
    "winding_numbers",
]

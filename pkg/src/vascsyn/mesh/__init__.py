from .core import (TriMesh, ValidationReport, clean_mesh, fill_small_holes,
                   icosphere, smooth, validate_closed)
from .boolean import boolean_union, extract_level_set, mean_edge_length
from .remesh import isotropic_remesh
from .spatial import (MeshQuery, closest_point_on_triangles,
                      hausdorff_sampled, ray_cast_batch, ray_first_hit,
                      sample_surface)
from .io import read_obj, read_ply, write_obj, write_ply

__all__ = [
    "TriMesh", "ValidationReport", "clean_mesh", "fill_small_holes",
    "icosphere", "smooth",
    "validate_closed", "boolean_union", "extract_level_set",
    "mean_edge_length", "isotropic_remesh", "MeshQuery",
    "closest_point_on_triangles", "hausdorff_sampled",
    "ray_cast_batch", "ray_first_hit", "sample_surface",
    "read_obj", "read_ply", "write_obj", "write_ply",
]

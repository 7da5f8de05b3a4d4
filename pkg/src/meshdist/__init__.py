"""meshdist: exact minimum/maximum distance queries between triangle meshes.

Build an implicit full-binary AABB tree over each mesh once, refit it as
the mesh moves, and run front-based traversal queries that return exact
distances with witness triangle pairs.
"""

from .bvh import Aabb, F12Bvh, build_f12, descendant, morton_codes, refit, remaining_depth
from .bounds import (
    aabb_max_upper,
    aabb_min_lower,
    enhanced_max_lower,
    enhanced_min_upper,
    tri_tri_max,
    tri_tri_min,
)
from .errors import (
    ConfigError,
    DegenerateTriangleError,
    FrontOverflowError,
    MeshDistError,
    ObjParseError,
    SceneError,
    SizeGuardError,
    TightnessError,
    TopologyMismatchError,
)
from .mesh import RigidTransform, TriangleMesh, apply_transform, load_obj
from .query import (
    EngineConfig,
    Front,
    FrontEntry,
    IterationStat,
    QueryResult,
    QueryState,
    Witness,
    adaptive_depth,
    brute_force_max,
    brute_force_min,
    expand_front,
    process_leaf_pair,
    run_dfs_baseline,
    run_max_query,
    run_min_query,
)
from .scenes import gen_scene, scene_kinds

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "ConfigError",
    "DegenerateTriangleError",
    "EngineConfig",
    "F12Bvh",
    "Front",
    "FrontEntry",
    "FrontOverflowError",
    "IterationStat",
    "MeshDistError",
    "ObjParseError",
    "QueryResult",
    "QueryState",
    "RigidTransform",
    "SceneError",
    "SizeGuardError",
    "TightnessError",
    "TopologyMismatchError",
    "TriangleMesh",
    "Witness",
    "aabb_max_upper",
    "aabb_min_lower",
    "adaptive_depth",
    "apply_transform",
    "brute_force_max",
    "brute_force_min",
    "build_f12",
    "descendant",
    "enhanced_max_lower",
    "enhanced_min_upper",
    "expand_front",
    "gen_scene",
    "load_obj",
    "morton_codes",
    "process_leaf_pair",
    "refit",
    "remaining_depth",
    "run_dfs_baseline",
    "run_max_query",
    "run_min_query",
    "scene_kinds",
    "tri_tri_max",
    "tri_tri_min",
    "__version__",
]

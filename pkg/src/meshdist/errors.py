"""Exception hierarchy for meshdist.

Everything raised on purpose derives from MeshDistError so CLI code can
separate expected failures (bad input, guard refusals) from genuine bugs.
"""


class MeshDistError(Exception):
    """Base class for all expected meshdist failures."""


class ObjParseError(MeshDistError):
    """Malformed Wavefront OBJ input. Carries the 1-based line number."""

    def __init__(self, path: str, line_no: int, message: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DegenerateTriangleError(MeshDistError):
    """A face repeats a vertex index. Lists every offending face."""

    def __init__(self, faces: list[tuple[int, tuple[int, int, int]]]):
        self.faces = faces
        listed = ", ".join(f"face {i} = {tri}" for i, tri in faces[:8])
        more = "" if len(faces) <= 8 else f" (+{len(faces) - 8} more)"
        super().__init__(f"triangles with repeated vertex indices: {listed}{more}")


class SceneError(MeshDistError):
    """Unknown scene kind or invalid generator parameters."""


class TightnessError(MeshDistError):
    """An enhanced bound was requested for a box not flagged tight."""


class TopologyMismatchError(MeshDistError):
    """Refit called with a mesh whose triangle count differs from the build."""


class FrontOverflowError(MeshDistError):
    """A front expansion exceeded the configured hard entry cap."""

    def __init__(self, candidates: int, front_in: int, cap: int):
        self.candidates = candidates
        self.front_in = front_in
        self.cap = cap
        super().__init__(
            f"front expansion would create {candidates} candidate pairs "
            f"from {front_in} entries, exceeding the hard cap of {cap}"
        )


class SizeGuardError(MeshDistError):
    """Brute-force oracle refused an oversized pair count."""

    def __init__(self, pairs: int, limit: int):
        self.pairs = pairs
        self.limit = limit
        super().__init__(
            f"brute force over {pairs} triangle pairs exceeds the guard "
            f"limit of {limit}; pass force=True (--force) to proceed"
        )


class ConfigError(MeshDistError):
    """Engine configuration violates its invariants."""

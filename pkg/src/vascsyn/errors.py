"""Exception hierarchy shared across the toolkit."""


class VascsynError(Exception):
    """Base class for all toolkit errors."""


class MeshError(VascsynError):
    pass


class AllFacesDegenerate(MeshError):
    """Mesh cleanup removed every face."""


class RemeshFailed(MeshError):
    """Isotropic remeshing produced a non-manifold result."""


class OpenInput(MeshError):
    """A boolean operand has boundary edges."""


class EmptySurface(MeshError):
    """No sign change in the sampled distance field."""


class DomainError(VascsynError):
    """Parameter outside its valid domain."""


class FitFailed(VascsynError):
    """Spline fit failed on degenerate control points."""


class DegenerateNeighborhood(VascsynError):
    """Too few / collinear neighbors for a curvature fit."""


class NoCandidate(VascsynError):
    """Ostium selection found no vertex in the search cone/ball."""


class RayMiss(VascsynError):
    """A ray that must hit the surface did not."""


class MergeFailed(VascsynError):
    """Bleb/sac boolean union failed."""


class UnionDisconnected(VascsynError):
    """Aneurysm and vessel do not intersect; union has two components."""


class CutMissed(VascsynError):
    """An opening cut plane intersected no local geometry."""


class RingInvalid(VascsynError):
    """Ostium vertices do not form one simple cycle of sufficient size."""

    def __init__(self, reason: str, detail: str = ""):
        msg = f"invalid ostium ring ({reason})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.reason = reason


class HullDegenerate(VascsynError):
    """Convex hull of (near-)coplanar input."""


class DivZero(VascsynError):
    """Zero denominator in a derived morphological index."""


class ExhaustedRetries(VascsynError):
    """Sample generation failed after all vessel/aneurysm retries."""

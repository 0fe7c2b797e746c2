"""Scene geometry: lattice generation, ground-plane images, relative vectors.

Coordinates follow one convention throughout: the ground is the line y = 0,
the positive half-space y > 0 holds the physical problem, and the source
plane is x = 0.  Scatterers are indexed row-major from the bottom-left.
"""

from dataclasses import dataclass, field
import math

from .errors import ConfigurationError, GeometryError

GROUND_TYPES = ("free", "rigid", "impedance")


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def mirrored(self):
        """Reflection in the ground line y = 0."""
        return Point2(self.x, -self.y)


@dataclass(frozen=True)
class ArrayConfig:
    """Square-lattice array description.

    ``columns`` counts cylinders along x (away from the source), ``rows``
    counts them along y (up from the ground).  ``standoff_hx`` is the
    distance from the source plane to the source-facing edge of the first
    column; ``height_hy`` the centre height of the lowest row.
    """

    columns: int
    rows: int
    lattice_constant: float
    standoff_hx: float
    height_hy: float
    radius: float

    def problems(self, grounded=True):
        out = []
        if self.columns < 1:
            out.append(("columns", "must be a positive integer"))
        if self.rows < 1:
            out.append(("rows", "must be a positive integer"))
        for name in ("lattice_constant", "standoff_hx", "height_hy", "radius"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                out.append((name, f"must be positive, got {val!r}"))
        if self.radius > 0 and self.lattice_constant <= 2 * self.radius:
            out.append(("lattice_constant", "must exceed the cylinder diameter 2*radius"))
        if grounded and 0 < self.height_hy < self.radius:
            out.append(("height_hy", "lowest row intersects the ground (height_hy < radius)"))
        return out


@dataclass(frozen=True)
class Scatterer:
    center: Point2
    radius: float


@dataclass(frozen=True)
class Scene:
    """Source, receiver and scatterers above (or without) a ground line."""

    source: Point2
    receiver: Point2
    scatterers: tuple = field(default_factory=tuple)
    ground: str = "rigid"

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        problems = self.problems()
        if problems:
            raise ConfigurationError(problems)

    def problems(self):
        out = []
        if self.ground not in GROUND_TYPES:
            out.append(("ground", f"unknown ground type {self.ground!r}"))
        grounded = self.ground != "free"
        if grounded:
            if self.source.y < 0:
                out.append(("source.y", "must be >= 0 above a ground"))
            if self.receiver.y < 0:
                out.append(("receiver.y", "must be >= 0 above a ground"))
        for i, s in enumerate(self.scatterers):
            if not (math.isfinite(s.radius) and s.radius > 0):
                out.append((f"scatterers[{i}].radius", "must be positive"))
                continue
            if grounded and s.center.y < s.radius:
                out.append((f"scatterers[{i}].center.y", "cylinder intersects the ground"))
            if distance(s.center, self.source) <= s.radius:
                out.append(("source", f"lies inside scatterer {i}"))
            if distance(s.center, self.receiver) < s.radius:
                out.append(("receiver", f"lies inside scatterer {i}"))
        for i, a in enumerate(self.scatterers):
            for j in range(i + 1, len(self.scatterers)):
                b = self.scatterers[j]
                if distance(a.center, b.center) <= a.radius + b.radius:
                    out.append((f"scatterers[{j}]", f"overlaps or touches scatterer {i}"))
        return out

    @property
    def centers(self):
        return [s.center for s in self.scatterers]

    @property
    def radii(self):
        return [s.radius for s in self.scatterers]


def build_square_lattice(cfg, grounded=True):
    """Centres of a ``rows`` x ``columns`` square lattice, row-major from bottom-left.

    Column j sits at x = Hx + a + j L and row i at y = Hy + i L.
    """
    problems = cfg.problems(grounded)
    if problems:
        raise ConfigurationError(problems)
    a, lat = cfg.radius, cfg.lattice_constant
    return [
        Point2(cfg.standoff_hx + a + j * lat, cfg.height_hy + i * lat)
        for i in range(cfg.rows)
        for j in range(cfg.columns)
    ]


def lattice_scatterers(cfg, grounded=True):
    return tuple(Scatterer(c, cfg.radius) for c in build_square_lattice(cfg, grounded))


def mirror_image(scene):
    """Scene with source, receiver and every scatterer reflected in y = 0.

    The image of scatterer m keeps index m.  Reflecting twice returns the
    original scene.  The result is built without re-validation since the
    image half-space is y < 0.
    """
    if scene.ground == "free":
        raise GeometryError("mirror_image needs a rigid or impedance ground")
    image = object.__new__(Scene)
    object.__setattr__(image, "source", scene.source.mirrored())
    object.__setattr__(image, "receiver", scene.receiver.mirrored())
    object.__setattr__(
        image,
        "scatterers",
        tuple(Scatterer(s.center.mirrored(), s.radius) for s in scene.scatterers),
    )
    object.__setattr__(image, "ground", scene.ground)
    return image


def distance(a, b):
    return math.hypot(b.x - a.x, b.y - a.y)


def relative_vector(origin, target):
    """Distance and polar angle in (-pi, pi] of ``target`` seen from ``origin``."""
    dx = target.x - origin.x
    dy = target.y - origin.y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        raise GeometryError(f"zero-length vector at ({origin.x}, {origin.y})")
    ang = math.atan2(dy, dx)
    if ang == -math.pi:
        ang = math.pi
    return dist, ang


def doubled_free_scene(scene):
    """Free-field scene holding the array plus its mirror image.

    Image cylinders come first (ordered by row from the bottom), so the result
    is again row-major from the bottom-left when the original array was.
    """
    images = sorted(
        (Scatterer(s.center.mirrored(), s.radius) for s in scene.scatterers),
        key=lambda s: (s.center.y, s.center.x),
    )
    return Scene(scene.source, scene.receiver, tuple(images) + scene.scatterers, "free")

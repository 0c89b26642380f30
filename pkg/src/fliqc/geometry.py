"""Distance queries between link segments and sphere obstacles, contact extraction.

Link numbering here is 1-based, matching ContactConfig.tracked_links and the
wire format; the kinematics layer uses 0-based joint indices internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import segment_sphere_batch
from .errors import DegenerateNormalError, ScenarioValidationError
from .kinematics import link_segments_world, point_jacobian_full

_DEGENERATE_TOL = 1e-12
_FALLBACK_NORMAL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SphereObstacle:
    id: str
    center: np.ndarray
    radius: float
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.radius <= 0:
            raise ScenarioValidationError("radius", "obstacle radius must be > 0")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))


@dataclass(frozen=True)
class LinkCapsule:
    """A link's collision segment in world coordinates, inflated by padding."""

    link_index: int  # 1-based
    p0: np.ndarray
    p1: np.ndarray
    padding: float

    def __post_init__(self):
        if self.padding < 0:
            raise ScenarioValidationError("padding", "capsule padding must be >= 0")


@dataclass(frozen=True)
class ContactConfig:
    epsilon: float
    padding: float = 0.15
    influence_margin: float = 0.02
    tracked_links: tuple = ()  # 1-based; empty means every link

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ScenarioValidationError("epsilon", "epsilon must be > 0")
        if self.padding < 0:
            raise ScenarioValidationError("padding", "padding must be >= 0")
        if self.influence_margin < 0:
            raise ScenarioValidationError("influence_margin", "influence_margin must be >= 0")
        object.__setattr__(self, "tracked_links", tuple(int(i) for i in self.tracked_links))


@dataclass(frozen=True)
class ContactCandidate:
    """One link-obstacle proximity pair inside the influence region.

    psi is the distance from the padded link surface to the obstacle surface,
    clamped at 0 under penetration (`degenerate` marks a normal that had to be
    recovered from the cache or the +z fallback). J_c is the 3xn positional
    Jacobian of the witness point.
    """

    link_index: int  # 1-based
    obstacle_id: str
    psi: float
    epsilon: float
    normal: np.ndarray
    witness_point: np.ndarray
    J_c: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        if self.psi < 0:
            raise ScenarioValidationError("psi", "psi is clamped at 0 and cannot be negative")
        if self.epsilon <= 0:
            raise ScenarioValidationError("epsilon", "epsilon must be > 0")
        if abs(np.linalg.norm(self.normal) - 1.0) > 1e-9:
            raise ScenarioValidationError("normal", "normal must be a unit vector")


def segment_sphere_distance(p0, p1, sphere, padding=0.0):
    """Distance from the padded segment surface to the sphere surface.

    Returns (psi, witness, normal): psi = max(0, |witness - center| - radius
    - padding); the normal points from the obstacle toward the link. Raises
    DegenerateNormalError when the witness coincides with the center.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t, dist = segment_sphere_batch(p0[None, :], p1[None, :], sphere.center[None, :], np.array([sphere.radius]))
    witness = p0 + t[0, 0] * (p1 - p0)
    gap = witness - sphere.center
    gap_norm = np.linalg.norm(gap)
    if gap_norm < _DEGENERATE_TOL:
        raise DegenerateNormalError(
            f"witness point coincides with obstacle center {sphere.id!r}"
        )
    psi = max(0.0, dist[0, 0] - padding)
    return psi, witness, gap / gap_norm


def link_capsules(model, state, cfg=None, links=None):
    """Capsules for the requested links (1-based; default all) posed in world."""
    world = link_segments_world(model, state)
    if links is None:
        links = cfg.tracked_links if cfg is not None and cfg.tracked_links else range(1, model.n + 1)
    pad = cfg.padding if cfg is not None else 0.0
    out = []
    for link in links:
        if not 1 <= link <= model.n:
            raise ScenarioValidationError("tracked_links", f"link {link} out of range [1, {model.n}]")
        for p0, p1 in world[link - 1]:
            out.append(LinkCapsule(
                link_index=link, p0=p0, p1=p1,
                padding=pad + float(model.radius_per_link[link - 1]),
            ))
    return out


def collect_contacts(model, state, obstacles, cfg, normal_cache=None):
    """Contact candidates within the influence region, one per (link, obstacle).

    For each tracked link the closest witness over that link's segments is
    kept (ties break toward the lower segment index); candidates farther than
    epsilon + influence_margin from the padded surface are dropped. When given,
    normal_cache (a dict owned by the caller, keyed by (link, obstacle_id)) is
    read for degenerate-normal recovery and updated in place.
    """
    if not obstacles:
        return []
    capsules = link_capsules(model, state, cfg)
    if not capsules:
        return []
    p0 = np.array([c.p0 for c in capsules])
    p1 = np.array([c.p1 for c in capsules])
    centers = np.array([o.center for o in obstacles])
    radii = np.array([o.radius for o in obstacles])
    t, dist = segment_sphere_batch(p0, p1, centers, radii)

    cutoff = cfg.epsilon + cfg.influence_margin
    candidates = []
    links = sorted(set(c.link_index for c in capsules))
    for link in links:
        rows = [i for i, c in enumerate(capsules) if c.link_index == link]
        for o_idx, obstacle in enumerate(obstacles):
            best = min(rows, key=lambda i: dist[i, o_idx])
            psi = max(0.0, dist[best, o_idx] - capsules[best].padding)
            if psi > cutoff:
                continue
            witness = p0[best] + t[best, o_idx] * (p1[best] - p0[best])
            gap = witness - obstacle.center
            gap_norm = np.linalg.norm(gap)
            degenerate = gap_norm < _DEGENERATE_TOL
            if degenerate:
                cached = normal_cache.get((link, obstacle.id)) if normal_cache is not None else None
                normal = cached.copy() if cached is not None else _FALLBACK_NORMAL.copy()
            else:
                normal = gap / gap_norm
            if normal_cache is not None:
                normal_cache[(link, obstacle.id)] = normal.copy()
            candidates.append(ContactCandidate(
                link_index=link,
                obstacle_id=obstacle.id,
                psi=float(psi),
                epsilon=cfg.epsilon,
                normal=normal,
                witness_point=witness,
                J_c=point_jacobian_full(model, state, link - 1, witness),
                degenerate=degenerate,
            ))
    return candidates


def surface_clearance(model, state, obstacles, links=None):
    """Smallest true surface-to-surface distance over links and obstacles.

    Uses the link cylinder radius but no safety padding; negative values mean
    interpenetration. Returns +inf with no obstacles.
    """
    if not obstacles:
        return np.inf
    world = link_segments_world(model, state)
    if links is None:
        links = range(1, model.n + 1)
    segs = []
    link_radii = []
    for link in links:
        for p0, p1 in world[link - 1]:
            segs.append((p0, p1))
            link_radii.append(float(model.radius_per_link[link - 1]))
    p0 = np.array([s[0] for s in segs])
    p1 = np.array([s[1] for s in segs])
    centers = np.array([o.center for o in obstacles])
    radii = np.array([o.radius for o in obstacles])
    _, dist = segment_sphere_batch(p0, p1, centers, radii)
    return float((dist - np.array(link_radii)[:, None]).min())


def advance_obstacles(obstacles, h, scripts=None):
    """Constant-velocity update: center += velocity * h.

    scripts maps obstacle id to a one-shot reversal waypoint: once the
    obstacle reaches or passes it (the vector toward the waypoint stops
    aligning with the velocity), the velocity flips sign and the entry is
    consumed from the caller's dict, giving an approach-then-retreat sweep.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    out = []
    for obs in obstacles:
        center = obs.center + h * obs.velocity
        velocity = obs.velocity
        waypoint = scripts.get(obs.id) if scripts else None
        if waypoint is not None and np.dot(np.asarray(waypoint) - center, velocity) <= 0.0:
            velocity = -velocity
            scripts.pop(obs.id)
        out.append(replace(obs, center=center, velocity=velocity))
    return out

"""Analytic scene primitives and vectorized nearest-hit ray casting.

Scenes are small lists of planes, spheres, finite cylinders and
axis-aligned boxes, shaded Lambertian under one directional light.
Intersection runs vectorized over all rays at once; depths are Euclidean
ray ranges with np.inf for misses.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-9


@dataclass
class Plane:
    point: np.ndarray
    normal: np.ndarray
    albedo: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float).reshape(3)
        self.normal = np.asarray(self.normal, dtype=float).reshape(3)
        n = np.linalg.norm(self.normal)
        if n < _EPS:
            raise ValueError("plane normal must be nonzero")
        self.normal = self.normal / n
        self.albedo = np.asarray(self.albedo, dtype=float).reshape(3)

    def intersect(self, origin, dirs):
        denom = dirs @ self.normal
        t = np.where(np.abs(denom) > _EPS, (self.point - origin) @ self.normal / np.where(denom == 0, 1.0, denom), np.inf)
        t = np.where(t > _EPS, t, np.inf)
        normals = np.broadcast_to(self.normal, dirs.shape)
        # flip the normal toward the viewer so both faces shade correctly
        facing = np.where((dirs @ self.normal) > 0.0, -1.0, 1.0)
        return t, normals * facing[:, None]


@dataclass
class Sphere:
    center: np.ndarray
    radius: float
    albedo: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        if not self.radius > 0.0:
            raise ValueError("sphere radius must be positive")
        self.albedo = np.asarray(self.albedo, dtype=float).reshape(3)

    def intersect(self, origin, dirs):
        oc = origin - self.center
        b = dirs @ oc
        c = oc @ oc - self.radius**2
        disc = b * b - c
        ok = disc >= 0.0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        t1 = -b - sq
        t2 = -b + sq
        t = np.where(t1 > _EPS, t1, t2)
        t = np.where(ok & (t > _EPS), t, np.inf)
        hit = origin + dirs * np.where(np.isfinite(t), t, 0.0)[:, None]
        normals = (hit - self.center) / self.radius
        return t, normals


@dataclass
class Cylinder:
    """Finite open cylinder (lateral surface) between endpoints p0 and p1."""

    p0: np.ndarray
    p1: np.ndarray
    radius: float
    albedo: np.ndarray

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float).reshape(3)
        self.p1 = np.asarray(self.p1, dtype=float).reshape(3)
        self.length = float(np.linalg.norm(self.p1 - self.p0))
        if self.length < _EPS:
            raise ValueError("cylinder endpoints must be distinct")
        if not self.radius > 0.0:
            raise ValueError("cylinder radius must be positive")
        self.axis = (self.p1 - self.p0) / self.length
        self.albedo = np.asarray(self.albedo, dtype=float).reshape(3)

    def intersect(self, origin, dirs):
        a = self.axis
        m = origin - self.p0
        md = m - (m @ a) * a
        dd = dirs - (dirs @ a)[:, None] * a
        qa = np.einsum("ij,ij->i", dd, dd)
        qb = dd @ md
        qc = md @ md - self.radius**2
        disc = qb * qb - qa * qc
        ok = (disc >= 0.0) & (qa > _EPS)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        safe_qa = np.where(qa > _EPS, qa, 1.0)
        t = np.full(dirs.shape[0], np.inf)
        for root in ((-qb - sq) / safe_qa, (-qb + sq) / safe_qa):
            h = (m + root[:, None] * dirs) @ a
            valid = ok & (root > _EPS) & (h >= 0.0) & (h <= self.length)
            t = np.where(valid & (root < t), root, t)
        hit = origin + dirs * np.where(np.isfinite(t), t, 0.0)[:, None]
        rad = hit - self.p0
        rad = rad - (rad @ a)[:, None] * a
        norm = np.linalg.norm(rad, axis=1, keepdims=True)
        normals = rad / np.where(norm > _EPS, norm, 1.0)
        return t, normals


@dataclass
class Box:
    """Axis-aligned box (slab method)."""

    center: np.ndarray
    half_extents: np.ndarray
    albedo: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        if np.any(self.half_extents <= 0.0):
            raise ValueError("box half extents must be positive")
        self.albedo = np.asarray(self.albedo, dtype=float).reshape(3)

    def intersect(self, origin, dirs):
        safe = np.where(np.abs(dirs) > _EPS, dirs, _EPS)
        lo = (self.center - self.half_extents - origin) / safe
        hi = (self.center + self.half_extents - origin) / safe
        tmin = np.minimum(lo, hi)
        tmax = np.maximum(lo, hi)
        t_near = tmin.max(axis=1)
        t_far = tmax.min(axis=1)
        hit = (t_near <= t_far) & (t_far > _EPS)
        t = np.where(t_near > _EPS, t_near, t_far)
        t = np.where(hit, t, np.inf)
        # normal is the axis of the entering slab
        axis = tmin.argmax(axis=1)
        normals = np.zeros_like(dirs)
        rows = np.arange(dirs.shape[0])
        normals[rows, axis] = -np.sign(safe[rows, axis])
        return t, normals


@dataclass
class Scene:
    primitives: list = field(default_factory=list)
    light_direction: np.ndarray = field(default_factory=lambda: np.array([0.3, 0.2, 0.9]))
    background: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ambient: float = 0.15

    def __post_init__(self):
        self.light_direction = np.asarray(self.light_direction, dtype=float).reshape(3)
        n = np.linalg.norm(self.light_direction)
        if n < _EPS:
            raise ValueError("light direction must be nonzero")
        self.light_direction = self.light_direction / n
        self.background = np.asarray(self.background, dtype=float).reshape(3)
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError("ambient must be in [0, 1]")


def raycast(scene: Scene, origin, dirs):
    """Nearest-hit ray casting with Lambertian shading.

    dirs: (n, 3) unit directions from a common origin. Returns
    (rgb (n, 3), depth (n,), hit (n,) bool); misses carry the background
    color and infinite depth.
    """
    origin = np.asarray(origin, dtype=float).reshape(3)
    dirs = np.asarray(dirs, dtype=float)
    n = dirs.shape[0]
    depth = np.full(n, np.inf)
    albedo = np.broadcast_to(scene.background, (n, 3)).copy()
    normals = np.zeros((n, 3))
    for prim in scene.primitives:
        t, nrm = prim.intersect(origin, dirs)
        closer = t < depth
        depth = np.where(closer, t, depth)
        albedo[closer] = prim.albedo
        normals[closer] = nrm[closer]
    hit = np.isfinite(depth)
    diffuse = np.maximum(0.0, normals @ (-scene.light_direction))
    shade = scene.ambient + (1.0 - scene.ambient) * diffuse
    rgb = np.where(hit[:, None], albedo * shade[:, None], albedo)
    return rgb, depth, hit


_PRIM_TYPES = {"plane": Plane, "sphere": Sphere, "cylinder": Cylinder, "box": Box}


def scene_from_dict(data: dict) -> Scene:
    prims = []
    for i, entry in enumerate(data.get("primitives", [])):
        kind = entry.get("type")
        if kind not in _PRIM_TYPES:
            raise ValueError(f"primitives[{i}].type: unknown primitive '{kind}'")
        kwargs = {k: v for k, v in entry.items() if k != "type"}
        try:
            prims.append(_PRIM_TYPES[kind](**kwargs))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"primitives[{i}]: {exc}") from exc
    return Scene(
        primitives=prims,
        light_direction=data.get("light_direction", [0.3, 0.2, 0.9]),
        background=data.get("background", [0.0, 0.0, 0.0]),
        ambient=data.get("ambient", 0.15),
    )


def load_scene(path) -> Scene:
    with open(path) as f:
        return scene_from_dict(json.load(f))


def pipe_scene(waypoints, radius, seafloor_z, pipe_albedo=(0.45, 0.18, 0.12),
               floor_albedo=(0.30, 0.32, 0.25)) -> Scene:
    """Scene for a pipe-following course: seafloor plane plus one cylinder
    per polyline segment, with sphere joints at interior corners."""
    waypoints = np.asarray(waypoints, dtype=float)
    prims = [Plane(point=[0.0, 0.0, seafloor_z], normal=[0.0, 0.0, -1.0], albedo=floor_albedo)]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        prims.append(Cylinder(p0=a, p1=b, radius=radius, albedo=pipe_albedo))
    for w in waypoints[1:-1]:
        prims.append(Sphere(center=w, radius=radius, albedo=pipe_albedo))
    return Scene(primitives=prims)

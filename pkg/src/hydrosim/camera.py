"""Pinhole rendering of analytic scenes plus the underwater image model.

A rendered frame is the in-air radiance degraded per pixel and channel by

    I = D + F + B
    D = J * exp(-beta * d)                    attenuated object signal
    F = w_f * (blur(D) - D)                   small-angle forward scatter
    B = B_inf * (1 - exp(-beta * d))          backscatter toward veiling light

where d is the Euclidean ray range. The forward-scatter blur is a Gaussian
whose sigma grows linearly with range (sigma_f pixels per meter), realized
by interpolating a small stack of uniformly blurred levels. Pixels with no
hit (d = inf) become pure veiling light.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .geom import euler_to_rotation
from .scene import Scene, raycast

# camera frame: +z optical axis, +x image right, +y image down.
# the default mount yaw of +90 deg makes the camera look along body +z
# (downward) with image-up = body +x (forward).
DOWNWARD_MOUNT_RPY = (0.0, 0.0, np.pi / 2)


@dataclass
class CameraIntrinsics:
    width: int = 320
    height: int = 180
    hfov: float = np.deg2rad(90.0)
    mount_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mount_rpy: np.ndarray = field(default_factory=lambda: np.array(DOWNWARD_MOUNT_RPY))

    def __post_init__(self):
        self.mount_position = np.asarray(self.mount_position, dtype=float).reshape(3)
        self.mount_rpy = np.asarray(self.mount_rpy, dtype=float).reshape(3)
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if not 0.0 < self.hfov < np.pi:
            raise ValueError("horizontal FOV must be in (0, pi)")

    def ray_directions(self):
        """Unit ray directions in the camera frame, shape (h*w, 3), row major."""
        f = (self.width / 2.0) / np.tan(self.hfov / 2.0)
        js = (np.arange(self.width) + 0.5) - self.width / 2.0
        is_ = (np.arange(self.height) + 0.5) - self.height / 2.0
        xs, ys = np.meshgrid(js / f, is_ / f)
        dirs = np.stack([xs, ys, np.ones_like(xs)], axis=-1).reshape(-1, 3)
        return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


@dataclass
class WaterOptics:
    """Per-channel water model parameters (R, G, B order)."""

    attenuation: np.ndarray = field(default_factory=lambda: np.array([0.45, 0.12, 0.08]))  # 1/m
    veiling_light: np.ndarray = field(default_factory=lambda: np.array([0.02, 0.25, 0.35]))
    forward_blur: float = 0.0  # sigma in pixels per meter of range
    forward_weight: float = 0.2
    schlick_k: float = 0.7
    schlick_modulation: bool = False  # scale veiling light by the phase of the light/view angle

    def __post_init__(self):
        self.attenuation = np.asarray(self.attenuation, dtype=float).reshape(3)
        self.veiling_light = np.asarray(self.veiling_light, dtype=float).reshape(3)
        if np.any(self.attenuation < 0.0):
            raise ValueError("attenuation must be non-negative")
        if np.any((self.veiling_light < 0.0) | (self.veiling_light > 1.0)):
            raise ValueError("veiling light must be in [0, 1]")
        if self.forward_blur < 0.0:
            raise ValueError("forward_blur must be non-negative")
        if not 0.0 <= self.forward_weight <= 1.0:
            raise ValueError("forward_weight must be in [0, 1]")
        if not -1.0 < self.schlick_k < 1.0:
            raise ValueError("schlick asymmetry must be in (-1, 1)")


@dataclass
class RenderedFrame:
    rgb: np.ndarray  # (h, w, 3) float in [0, 1]
    depth: np.ndarray  # (h, w) meters, inf = no hit
    timestamp: float = 0.0


def schlick_phase(cos_theta, k):
    """Schlick scattering phase function, normalized over the sphere.

    k = 0 is isotropic (1 / 4pi); k -> 1 is strongly forward-peaked.
    """
    cos_theta = np.asarray(cos_theta, dtype=float)
    if np.any(np.abs(cos_theta) > 1.0 + 1e-12):
        raise ValueError("cos_theta must lie in [-1, 1]")
    if not -1.0 < k < 1.0:
        raise ValueError("k must be in (-1, 1)")
    val = (1.0 - k * k) / (4.0 * np.pi * (1.0 - k * cos_theta) ** 2)
    return float(val) if val.ndim == 0 else val


def render_geometry(scene: Scene, camera_position, camera_rotation, intrinsics: CameraIntrinsics):
    """Ray-cast the scene from a world-frame camera pose.

    camera_rotation maps camera coordinates to world. Returns the in-air
    radiance image (h, w, 3) and Euclidean-range depth image (h, w).
    """
    dirs_cam = intrinsics.ray_directions()
    dirs_world = dirs_cam @ np.asarray(camera_rotation, dtype=float).T
    rgb, depth, _ = raycast(scene, camera_position, dirs_world)
    h, w = intrinsics.height, intrinsics.width
    return rgb.reshape(h, w, 3), depth.reshape(h, w)


def _blur_levels(image, sigmas):
    """Stack of uniformly blurred copies of image, one per sigma."""
    levels = []
    for s in sigmas:
        if s <= 0.0:
            levels.append(image)
        else:
            levels.append(gaussian_filter(image, sigma=(s, s, 0.0), mode="nearest"))
    return levels


def _range_blur(image, depth, sigma_per_m, n_levels=4):
    """Gaussian blur with per-pixel sigma = sigma_per_m * depth, via linear
    interpolation across n_levels uniformly blurred images."""
    finite = np.isfinite(depth)
    if not np.any(finite) or sigma_per_m <= 0.0:
        return image.copy()
    sig = np.where(finite, depth, 0.0) * sigma_per_m
    smax = float(sig.max())
    if smax <= 0.0:
        return image.copy()
    sigmas = np.linspace(0.0, smax, n_levels)
    levels = _blur_levels(image, sigmas)
    pos = sig / smax * (n_levels - 1)
    lower = np.clip(pos.astype(int), 0, n_levels - 2)
    frac = (pos - lower)[..., None]
    out = np.empty_like(image)
    stack = np.stack(levels)  # (L, h, w, 3)
    rows, cols = np.indices(depth.shape)
    out = stack[lower, rows, cols] * (1.0 - frac) + stack[lower + 1, rows, cols] * frac
    return out


def apply_water(radiance, depth, optics: WaterOptics, view_cos_light=None):
    """Degrade an in-air radiance image through the water column.

    view_cos_light: optional (h, w) cosines between ray directions and the
    light direction, used only when schlick_modulation is enabled.
    """
    radiance = np.asarray(radiance, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if radiance.shape[:2] != depth.shape:
        raise ValueError(f"radiance {radiance.shape[:2]} and depth {depth.shape} dimensions differ")
    d = depth[..., None]
    transmission = np.exp(-optics.attenuation * np.where(np.isfinite(d), d, np.inf))
    direct = radiance * transmission

    veil = np.broadcast_to(optics.veiling_light, radiance.shape)
    if optics.schlick_modulation and view_cos_light is not None:
        # normalize so that k = 0 leaves the veiling light unchanged
        gain = schlick_phase(view_cos_light, optics.schlick_k) * 4.0 * np.pi
        veil = veil * gain[..., None]
    backscatter = veil * (1.0 - transmission)

    out = direct + backscatter
    if optics.forward_blur > 0.0 and optics.forward_weight > 0.0:
        blurred = _range_blur(direct, depth, optics.forward_blur)
        out = out + optics.forward_weight * (blurred - direct)
    out[~np.isfinite(depth)] = optics.veiling_light
    return np.clip(out, 0.0, 1.0)


def capture(scene: Scene, optics: WaterOptics, intrinsics: CameraIntrinsics,
            vehicle_eta, timestamp: float = 0.0) -> RenderedFrame:
    """Render the camera mounted on a vehicle at pose eta and apply the
    water model. The returned depth image is the raw in-air range."""
    eta = np.asarray(vehicle_eta, dtype=float).reshape(6)
    R_wb = euler_to_rotation(*eta[3:])
    R_bc = euler_to_rotation(*intrinsics.mount_rpy)
    cam_pos = eta[:3] + R_wb @ intrinsics.mount_position
    cam_rot = R_wb @ R_bc
    radiance, depth = render_geometry(scene, cam_pos, cam_rot, intrinsics)
    cos_light = None
    if optics.schlick_modulation:
        dirs_world = intrinsics.ray_directions() @ cam_rot.T
        cos_light = (dirs_world @ scene.light_direction).reshape(depth.shape)
    rgb = apply_water(radiance, depth, optics, view_cos_light=cos_light)
    return RenderedFrame(rgb=rgb, depth=depth, timestamp=timestamp)


# ---------------------------------------------------------------------------
# frame files: binary PPM (P6, 8 bit) for RGB, PGM (P5, 16 bit) for depth
# ---------------------------------------------------------------------------

DEPTH_NO_HIT = 65535  # PGM value for no hit / out of range (depth in mm)


def write_ppm(path, rgb):
    rgb = np.asarray(rgb)
    data = (np.clip(rgb, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    h, w = data.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def read_ppm(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P6":
            raise ValueError(f"not a binary PPM file: {path}")
        w, h = map(int, f.readline().split())
        maxval = int(f.readline())
        data = np.frombuffer(f.read(w * h * 3), dtype=np.uint8)
    return data.reshape(h, w, 3).astype(float) / maxval


def write_pgm16(path, depth_m):
    """Depth in millimeters, big-endian 16 bit; DEPTH_NO_HIT for inf/out of range."""
    depth_m = np.asarray(depth_m, dtype=float)
    mm = np.where(np.isfinite(depth_m), np.round(depth_m * 1000.0), DEPTH_NO_HIT)
    mm = np.clip(mm, 0, DEPTH_NO_HIT).astype(">u2")
    h, w = mm.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n{DEPTH_NO_HIT}\n".encode())
        f.write(mm.tobytes())


def read_pgm16(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise ValueError(f"not a binary PGM file: {path}")
        w, h = map(int, f.readline().split())
        maxval = int(f.readline())
        if maxval != DEPTH_NO_HIT:
            raise ValueError(f"expected 16-bit depth PGM with maxval {DEPTH_NO_HIT}")
        data = np.frombuffer(f.read(w * h * 2), dtype=">u2").reshape(h, w)
    depth = data.astype(float) / 1000.0
    return np.where(data == DEPTH_NO_HIT, np.inf, depth)

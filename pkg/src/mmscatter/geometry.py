"""Scene description and the arc / semicylinder measurement geometry.

A single rectangular wall is illuminated by a fixed Tx; the Rx is stepped
along a circular arc of configurable radius around the wall center (and
optionally raised by a set of height offsets, sweeping a semicylinder).
Azimuth 0 deg is the wall normal at the center; positive azimuth is the
specular side of the Tx. Both antennas are boresighted on the wall center,
with full gain inside the half-power beamwidth and a flat -20 dB floor
outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lobes import ScatterGeometry

__all__ = [
    "Wall",
    "Scene",
    "ScanSpec",
    "RxPosition",
    "scan_positions",
    "specular_point",
    "patch_angles",
    "antenna_mask",
    "paper_scene",
    "DEFAULT_HPBW_DEG",
    "MASK_FLOOR",
]

_UP = np.array([0.0, 0.0, 1.0])

DEFAULT_HPBW_DEG = 23.0
# Gain multiplier outside the half-power beamwidth (-20 dB).
MASK_FLOOR = 0.01

DEFAULT_ARC_HEIGHTS = (0.0,)
DEFAULT_CYLINDER_HEIGHTS = (0.0, 0.10, 0.20, 0.30)


def _as_vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Wall:
    """Vertical rectangular wall: center, outward unit normal, extents, material name."""

    center: np.ndarray
    normal: np.ndarray
    width: float
    height: float
    material: str

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "wall center"))
        object.__setattr__(self, "normal", _as_vec3(self.normal, "wall normal"))
        if abs(float(np.linalg.norm(self.normal)) - 1.0) > 1e-12:
            raise ValueError("wall normal must be unit length (within 1e-12)")
        if self.width <= 0.0 or self.height <= 0.0:
            raise ValueError("wall width and height must be > 0")
        if abs(float(np.dot(self.normal, _UP))) > 1.0 - 1e-9:
            raise ValueError("wall normal must not be vertical")

    @property
    def u_axis(self) -> np.ndarray:
        """Horizontal in-wall axis (width direction)."""
        u = np.cross(_UP, self.normal)
        return u / np.linalg.norm(u)

    @property
    def w_axis(self) -> np.ndarray:
        """Vertical in-wall axis (height direction)."""
        return np.cross(self.normal, self.u_axis)

    def contains(self, point: np.ndarray, tol: float = 1e-9) -> bool:
        rel = point - self.center
        return (
            abs(float(np.dot(rel, self.u_axis))) <= self.width / 2.0 + tol
            and abs(float(np.dot(rel, self.w_axis))) <= self.height / 2.0 + tol
        )


@dataclass(frozen=True, eq=False)
class Scene:
    """One wall, one Tx position, one carrier frequency."""

    wall: Wall
    tx: np.ndarray
    carrier_frequency: float

    def __post_init__(self):
        object.__setattr__(self, "tx", _as_vec3(self.tx, "tx position"))
        if self.carrier_frequency <= 0.0:
            raise ValueError("carrier_frequency must be > 0 Hz")
        if float(np.dot(self.tx - self.wall.center, self.wall.normal)) <= 0.0:
            raise ValueError("tx must lie strictly on the outward side of the wall plane")

    @property
    def incidence_angle(self) -> float:
        """Incidence angle at the wall center, radians from the normal."""
        to_tx = self.tx - self.wall.center
        cos_t = float(np.dot(to_tx, self.wall.normal) / np.linalg.norm(to_tx))
        return math.acos(min(1.0, max(-1.0, cos_t)))

    @property
    def specular_sign(self) -> float:
        """Sign of the u-axis half-plane holding the specular direction (+1/-1)."""
        side = float(np.dot(self.tx - self.wall.center, self.wall.u_axis))
        return 1.0 if side <= 0.0 else -1.0


@dataclass(frozen=True)
class ScanSpec:
    """Receiver scan layout: arc radius, azimuth stepping, height offsets (m)."""

    radius: float = 1.5
    azimuth_step_deg: float = 10.0
    azimuth_range_deg: float = 180.0
    height_offsets: tuple[float, ...] = DEFAULT_ARC_HEIGHTS

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("scan radius must be > 0")
        if self.azimuth_step_deg <= 0.0 or self.azimuth_range_deg <= 0.0:
            raise ValueError("azimuth step and range must be > 0")
        steps = self.azimuth_range_deg / self.azimuth_step_deg
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(
                f"azimuth step {self.azimuth_step_deg} must divide range {self.azimuth_range_deg} evenly"
            )
        if len(self.height_offsets) == 0:
            raise ValueError("at least one height offset is required")
        object.__setattr__(self, "height_offsets", tuple(float(h) for h in self.height_offsets))

    def azimuths_deg(self) -> list[float]:
        n = round(self.azimuth_range_deg / self.azimuth_step_deg)
        half = self.azimuth_range_deg / 2.0
        return [-half + k * self.azimuth_step_deg for k in range(n + 1)]


@dataclass(frozen=True, eq=False)
class RxPosition:
    azimuth_deg: float
    delta_h: float
    position: np.ndarray


def rx_position(scene: Scene, radius: float, azimuth_deg: float, delta_h: float) -> np.ndarray:
    """Rx location on the scan cylinder: azimuth from the wall normal, specular side positive."""
    az = math.radians(azimuth_deg)
    wall = scene.wall
    return (
        wall.center
        + radius * (math.cos(az) * wall.normal + math.sin(az) * scene.specular_sign * wall.u_axis)
        + delta_h * wall.w_axis
    )


def scan_positions(scene: Scene, spec: ScanSpec) -> list[RxPosition]:
    """Ordered receiver positions, sorted by (delta_h, azimuth)."""
    positions = []
    for dh in sorted(spec.height_offsets):
        for az in spec.azimuths_deg():
            positions.append(RxPosition(azimuth_deg=az, delta_h=dh, position=rx_position(scene, spec.radius, az, dh)))
    return positions


def specular_point(tx: np.ndarray, rx: np.ndarray, wall: Wall) -> np.ndarray | None:
    """Image-method reflection point on the wall, or None if it misses the rectangle."""
    tx = _as_vec3(tx, "tx")
    rx = _as_vec3(rx, "rx")
    n = wall.normal
    tx_height = float(np.dot(tx - wall.center, n))
    rx_height = float(np.dot(rx - wall.center, n))
    if tx_height <= 0.0 or rx_height <= 0.0:
        raise ValueError("tx and rx must lie on the outward side of the wall plane")
    mirrored = tx - 2.0 * tx_height * n
    direction = rx - mirrored
    denom = float(np.dot(direction, n))
    if denom <= 0.0:
        return None
    t = -float(np.dot(mirrored - wall.center, n)) / denom
    if not 0.0 < t < 1.0:
        return None
    point = mirrored + t * direction
    if not wall.contains(point):
        return None
    return point


def patch_angles(
    tx: np.ndarray,
    rx: np.ndarray,
    patch_center: np.ndarray,
    wall_normal: np.ndarray,
    extent: float = 1.0,
) -> ScatterGeometry:
    """Incidence/scattering angles and lobe angles for one surface element.

    psi_r is measured between the Rx direction and the mirror image of the
    incident direction; psi_i between the Rx direction and the
    reverse-incident direction. Both are 3D angles, so the same values
    serve in-plane and raised receivers.
    """
    tx = _as_vec3(tx, "tx")
    rx = _as_vec3(rx, "rx")
    patch = _as_vec3(patch_center, "patch_center")
    n = _as_vec3(wall_normal, "wall_normal")

    to_patch = patch - tx
    r_i = float(np.linalg.norm(to_patch))
    from_patch = rx - patch
    r_s = float(np.linalg.norm(from_patch))
    if r_i == 0.0 or r_s == 0.0:
        raise ValueError("degenerate geometry: tx or rx coincides with the patch")
    v_i = to_patch / r_i
    v_s = from_patch / r_s

    cos_ti = float(np.dot(-v_i, n))
    if cos_ti <= 0.0:
        raise ValueError("tx does not illuminate the patch from the outward side")
    cos_ts = float(np.dot(v_s, n))
    if cos_ts < 0.0:
        raise ValueError("rx lies behind the wall plane")

    spec_dir = v_i - 2.0 * float(np.dot(v_i, n)) * n
    psi_r = math.acos(min(1.0, max(-1.0, float(np.dot(v_s, spec_dir)))))
    psi_i = math.acos(min(1.0, max(-1.0, float(np.dot(v_s, -v_i)))))

    return ScatterGeometry(
        r_i=r_i,
        r_s=r_s,
        theta_i=math.acos(min(1.0, cos_ti)),
        theta_s=math.acos(min(1.0, cos_ts)),
        psi_r=psi_r,
        psi_i=psi_i,
        surface_extent=extent,
    )


def antenna_mask(boresight: np.ndarray, ray: np.ndarray, hpbw_deg: float = DEFAULT_HPBW_DEG) -> float:
    """Gain multiplier for a ray leaving an antenna aimed along boresight.

    Full gain within half the beamwidth of boresight, MASK_FLOOR outside.
    """
    b = np.asarray(boresight, dtype=float)
    r = np.asarray(ray, dtype=float)
    nb = float(np.linalg.norm(b))
    nr = float(np.linalg.norm(r))
    if nb == 0.0 or nr == 0.0:
        raise ValueError("zero-length direction vector")
    cos_off = float(np.dot(b, r) / (nb * nr))
    offset = math.acos(min(1.0, max(-1.0, cos_off)))
    return 1.0 if offset <= math.radians(hpbw_deg) / 2.0 else MASK_FLOOR


def paper_scene(
    material: str,
    theta_i_deg: float,
    frequency_hz: float = 28.0e9,
    tx_distance: float = 1.5,
    wall_width: float = 3.0,
    wall_height: float = 3.0,
) -> Scene:
    """Default measurement layout: wall at the origin, Tx on the incident side.

    The wall normal is +x and the specular side is +y; the Tx sits at the
    given distance and incidence angle on the -y side, at the wall-center
    height.
    """
    if not 0.0 <= theta_i_deg < 90.0:
        raise ValueError(f"theta_i_deg must be in [0, 90), got {theta_i_deg}")
    wall = Wall(
        center=np.zeros(3),
        normal=np.array([1.0, 0.0, 0.0]),
        width=wall_width,
        height=wall_height,
        material=material,
    )
    theta = math.radians(theta_i_deg)
    tx = wall.center + tx_distance * (math.cos(theta) * wall.normal - math.sin(theta) * wall.u_axis)
    return Scene(wall=wall, tx=tx, carrier_frequency=frequency_hz)

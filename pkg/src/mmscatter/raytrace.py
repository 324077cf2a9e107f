"""Single-bounce simulation: specular image path plus tiled diffuse sum.

The wall is split into near-square tiles; every tile contributes incoherent
diffuse power through the active lobe model, and the image-method specular
path contributes Friis power weighted by |Gamma_rough|^2. Two gates emulate
the measurement's path selection: tiles whose path length leaves the delay
window around the strongest path are cut individually (the 5 ns and 1.5 m
readings coincide at the wavelength convention used here; the stricter one
applies), and a whole path family (the specular path, or the aggregated
diffuse sum) is dropped when it falls more than 35 dB below the stronger
one. Tile sums always run in tile-index order, so identical inputs give
bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import SPEED_OF_LIGHT, watts_to_dbm
from .fileio import height_m_to_cm
from .geometry import Scene, ScanSpec, antenna_mask, scan_positions, specular_point
from .lobes import LobeModel, LobeParams, NormalizationMode, RadioLink, single_lobe_norm
from .materials import Material, MaterialDatabase, Polarization, fresnel_gamma, rayleigh_factor

__all__ = [
    "PathKind",
    "PathContribution",
    "GatingReport",
    "SimResult",
    "SimRecord",
    "ConvergenceReport",
    "ScanPattern",
    "build_pattern",
    "simulate_point",
    "simulate_scan",
    "convergence_probe",
    "POWER_GATE_DB",
    "LENGTH_GATE_M",
    "DELAY_GATE_S",
]

POWER_GATE_DB = 35.0
LENGTH_GATE_M = 1.5
DELAY_GATE_S = 5e-9

DEFAULT_TILE_EDGE = 0.10
CONVERGENCE_EDGES = (0.4, 0.2, 0.1, 0.05, 0.025)
CONVERGENCE_TOL_DB = 0.1


def _length_gate() -> float:
    # both gates implemented; the stricter one applies
    return min(LENGTH_GATE_M, DELAY_GATE_S * SPEED_OF_LIGHT)


class PathKind(Enum):
    SPECULAR = "specular"
    DIFFUSE = "diffuse"


@dataclass(frozen=True)
class PathContribution:
    kind: PathKind
    patch_id: int | None
    power: float
    path_length: float
    excess_delay: float


@dataclass(frozen=True)
class GatingReport:
    dropped_power: int
    dropped_delay: int
    retained: int


@dataclass(frozen=True)
class SimResult:
    total_power_dbm: float
    specular_power_dbm: float
    diffuse_power_dbm: float
    contributions: tuple[PathContribution, ...]
    gating_report: GatingReport


@dataclass(frozen=True)
class SimRecord:
    """One simulated scan sample; delta_h is carried in the scan-file unit (cm)."""

    azimuth_deg: float
    delta_h_cm: float
    power_dbm: float
    specular_dbm: float
    diffuse_dbm: float


@dataclass(frozen=True)
class ConvergenceReport:
    entries: tuple[tuple[float, float], ...]
    converged: bool


def _resolve_material(materials: MaterialDatabase | Material, name: str) -> Material:
    if isinstance(materials, Material):
        return materials
    return materials.get(name)


class ScanPattern:
    """Precomputed geometry/constants for a fixed scene, receiver set, and tiling.

    Evaluating a candidate LobeParams against the pattern is a handful of
    vectorized array operations, and the same evaluation path serves both
    scan simulation and fitting, so predicted powers are bit-identical
    across the two.
    """

    def __init__(self, scene, link, mode, tile_theta, tile_area, const, u_base, v_base, lengths, spec_power, spec_length):
        self.scene = scene
        self.link = link
        self.mode = mode
        self.tile_theta = tile_theta  # (T,)
        self.tile_area = tile_area
        self._const = const  # (P, T): everything except S^2, lobe gain, normalization
        self._u = u_base  # (P, T): (1 + cos psi_r)/2
        self._v = v_base  # (P, T): (1 + cos psi_i)/2
        self._lengths = lengths  # (P, T): r_i + r_s
        self._spec_power = spec_power  # (P,)
        self._spec_length = spec_length  # (P,)
        self._norm_cache: dict[int, np.ndarray] = {}
        self._u_pow: dict[int, np.ndarray] = {}
        self._v_pow: dict[int, np.ndarray] = {}

    @property
    def n_positions(self) -> int:
        return self._const.shape[0]

    @property
    def n_tiles(self) -> int:
        return self._const.shape[1]

    def _norms(self, alpha: int) -> np.ndarray:
        table = self._norm_cache.get(alpha)
        if table is None:
            table = np.array([single_lobe_norm(self.mode, alpha, float(t)) for t in self.tile_theta])
            self._norm_cache[alpha] = table
        return table

    def _u_power(self, alpha: int) -> np.ndarray:
        arr = self._u_pow.get(alpha)
        if arr is None:
            arr = self._u**alpha
            self._u_pow[alpha] = arr
        return arr

    def _v_power(self, alpha: int) -> np.ndarray:
        arr = self._v_pow.get(alpha)
        if arr is None:
            arr = self._v**alpha
            self._v_pow[alpha] = arr
        return arr

    def tile_powers(self, params: LobeParams) -> np.ndarray:
        """(P, T) diffuse power per tile before gating, watts."""
        s_sq = params.s_coeff * params.s_coeff
        if params.model is LobeModel.SINGLE_LOBE:
            gain = self._u_power(params.alpha_r)
            norm = self._norms(params.alpha_r)
        else:
            lam = params.lambda_mix
            gain = lam * self._u_power(params.alpha_r) + (1.0 - lam) * self._v_power(params.alpha_i)
            norm = lam * self._norms(params.alpha_r) + (1.0 - lam) * self._norms(params.alpha_i)
        return s_sq * self._const * gain / norm

    def predict(self, params: LobeParams, power_gate_db: float = POWER_GATE_DB):
        """Gated per-position powers: (total_w, spec_w, diff_w, dropped_power, dropped_delay).

        The path-length (delay) gate cuts individual tiles: only surface
        elements whose path length sits within the window around the
        strongest path contribute. The power gate then de-noises whole
        paths: the specular path and the aggregated diffuse path are each
        dropped when more than power_gate_db below the stronger of the two;
        gating tiles individually would make the diffuse sum depend on the
        tiling, so the aggregate carries the rule.
        """
        tile_p = self.tile_powers(params)
        spec_p = self._spec_power
        gate = _length_gate()
        floor = 10.0 ** (-power_gate_db / 10.0)

        # the strongest single contribution anchors the delay window
        tile_max = tile_p.max(axis=1)
        idx = tile_p.argmax(axis=1)
        tile_best_len = self._lengths[np.arange(tile_p.shape[0]), idx]
        best_len = np.where(spec_p >= tile_max, self._spec_length, tile_best_len)

        tile_alive = tile_p > 0.0
        tile_delay_ok = np.abs(self._lengths - best_len[:, None]) <= gate
        diff_sum = np.where(tile_alive & tile_delay_ok, tile_p, 0.0).sum(axis=1)

        spec_alive = spec_p > 0.0
        spec_delay_ok = np.abs(self._spec_length - best_len) <= gate
        spec_in_window = np.where(spec_alive & spec_delay_ok, spec_p, 0.0)

        threshold = np.maximum(spec_in_window, diff_sum) * floor
        diff_w = np.where(diff_sum >= threshold, diff_sum, 0.0)
        spec_w = np.where(spec_in_window >= threshold, spec_in_window, 0.0)
        total_w = spec_w + diff_w

        n_window_tiles = (tile_alive & tile_delay_ok).sum(axis=1)
        dropped_delay = (tile_alive & ~tile_delay_ok).sum(axis=1) + (spec_alive & ~spec_delay_ok)
        dropped_power = np.where((diff_sum > 0.0) & (diff_sum < threshold), n_window_tiles, 0) + (
            (spec_in_window > 0.0) & (spec_in_window < threshold)
        )
        return total_w, spec_w, diff_w, dropped_power, dropped_delay

    def contributions(
        self, params: LobeParams, position: int, power_gate_db: float = POWER_GATE_DB
    ) -> tuple[tuple[PathContribution, ...], GatingReport]:
        """Retained contributions at one receiver, in specular-then-tile order."""
        tile_p = self.tile_powers(params)[position]
        spec_p = float(self._spec_power[position])
        spec_len = float(self._spec_length[position])
        gate = _length_gate()
        floor = 10.0 ** (-power_gate_db / 10.0)

        tile_max = float(tile_p.max()) if tile_p.size else 0.0
        if spec_p >= tile_max:
            best_len = spec_len
        else:
            best_len = float(self._lengths[position, int(tile_p.argmax())])

        spec_alive = spec_p > 0.0
        spec_delay_ok = abs(spec_len - best_len) <= gate
        window_tiles = []
        dropped_delay = 0
        for t in range(tile_p.shape[0]):
            p = float(tile_p[t])
            if p <= 0.0:
                continue
            if abs(float(self._lengths[position, t]) - best_len) <= gate:
                window_tiles.append((t, p))
            else:
                dropped_delay += 1
        if spec_alive and not spec_delay_ok:
            dropped_delay += 1

        diff_sum = sum(p for _, p in window_tiles)
        spec_in_window = spec_p if (spec_alive and spec_delay_ok) else 0.0
        threshold = max(spec_in_window, diff_sum) * floor
        spec_kept = spec_in_window > 0.0 and spec_in_window >= threshold
        diff_kept = diff_sum > 0.0 and diff_sum >= threshold

        dropped_power = 0
        if spec_in_window > 0.0 and not spec_kept:
            dropped_power += 1
        if diff_sum > 0.0 and not diff_kept:
            dropped_power += len(window_tiles)

        kept: list[PathContribution] = []
        if spec_kept:
            kept.append(
                PathContribution(
                    kind=PathKind.SPECULAR,
                    patch_id=None,
                    power=spec_in_window,
                    path_length=spec_len,
                    excess_delay=(spec_len - best_len) / SPEED_OF_LIGHT,
                )
            )
        if diff_kept:
            for t, p in window_tiles:
                length = float(self._lengths[position, t])
                kept.append(
                    PathContribution(
                        kind=PathKind.DIFFUSE,
                        patch_id=t,
                        power=p,
                        path_length=length,
                        excess_delay=(length - best_len) / SPEED_OF_LIGHT,
                    )
                )
        report = GatingReport(dropped_power=int(dropped_power), dropped_delay=int(dropped_delay), retained=len(kept))
        return tuple(kept), report


def tile_centers(scene: Scene, tile_edge: float) -> tuple[np.ndarray, float]:
    """Tile-center positions (T, 3) in row-major (height, width) order, plus tile area."""
    if tile_edge <= 0.0:
        raise ValueError(f"tile edge must be > 0 m, got {tile_edge}")
    wall = scene.wall
    n_u = max(1, math.ceil(wall.width / tile_edge))
    n_w = max(1, math.ceil(wall.height / tile_edge))
    du = wall.width / n_u
    dw = wall.height / n_w
    centers = np.empty((n_u * n_w, 3))
    k = 0
    for iw in range(n_w):
        off_w = -wall.height / 2.0 + (iw + 0.5) * dw
        for iu in range(n_u):
            off_u = -wall.width / 2.0 + (iu + 0.5) * du
            centers[k] = wall.center + off_u * wall.u_axis + off_w * wall.w_axis
            k += 1
    return centers, du * dw


def build_pattern(
    scene: Scene,
    rx_positions: np.ndarray,
    link: RadioLink,
    materials: MaterialDatabase | Material,
    tile_edge: float = DEFAULT_TILE_EDGE,
    mode: NormalizationMode = NormalizationMode.HEMISPHERE,
    polarization: Polarization = Polarization.TE,
    apply_antenna_mask: bool = False,
) -> ScanPattern:
    """Precompute per-tile geometry and constants for a set of receivers.

    With apply_antenna_mask the center-boresighted beam mask multiplies
    every path at both ends. It is off by default: the hard -20 dB floor
    suppresses the specular path 40 dB at wide receiver angles while the
    wall-center tiles stay at full gain, which inverts the specular/diffuse
    balance the single-bounce model is meant to reproduce; the 35 dB power
    gate already removes out-of-beam clutter.
    """
    material = _resolve_material(materials, scene.wall.material)
    rx = np.atleast_2d(np.asarray(rx_positions, dtype=float))
    if rx.shape[1] != 3:
        raise ValueError("rx_positions must be (P, 3)")
    wall = scene.wall
    n = wall.normal
    tx = scene.tx
    centers, area = tile_centers(scene, tile_edge)

    to_tile = centers - tx  # (T, 3)
    r_i = np.linalg.norm(to_tile, axis=1)
    if np.any(r_i == 0.0):
        raise ValueError("tx coincides with a wall tile")
    v_i = to_tile / r_i[:, None]
    cos_ti = np.clip(-(v_i @ n), -1.0, 1.0)
    if np.any(cos_ti <= 0.0):
        raise ValueError("tx does not illuminate the full wall from the outward side")
    tile_theta = np.arccos(cos_ti)
    spec_dir = v_i - 2.0 * (v_i @ n)[:, None] * n

    tx_bore = wall.center - tx
    if apply_antenna_mask:
        tx_mask = np.array([antenna_mask(tx_bore, d) for d in to_tile])
    else:
        tx_mask = np.ones(centers.shape[0])

    n_pos = rx.shape[0]
    n_tiles = centers.shape[0]
    const = np.empty((n_pos, n_tiles))
    u_base = np.empty((n_pos, n_tiles))
    v_base = np.empty((n_pos, n_tiles))
    lengths = np.empty((n_pos, n_tiles))
    spec_power = np.zeros(n_pos)
    spec_length = np.zeros(n_pos)

    k_sq = link.k_const**2
    rx_gain_scale = link.g_r * link.wavelength**2 / (480.0 * math.pi**2)

    for p in range(n_pos):
        rp = rx[p]
        from_tile = rp - centers
        r_s = np.linalg.norm(from_tile, axis=1)
        if np.any(r_s == 0.0):
            raise ValueError("rx coincides with a wall tile")
        v_s = from_tile / r_s[:, None]
        if np.any(np.clip(v_s @ n, -1.0, 1.0) < 0.0):
            raise ValueError("rx lies behind the wall plane")
        cos_psi_r = np.clip((v_s * spec_dir).sum(axis=1), -1.0, 1.0)
        cos_psi_i = np.clip((v_s * -v_i).sum(axis=1), -1.0, 1.0)
        u_base[p] = (1.0 + cos_psi_r) / 2.0
        v_base[p] = (1.0 + cos_psi_i) / 2.0
        lengths[p] = r_i + r_s

        rx_bore = wall.center - rp
        if apply_antenna_mask:
            rx_mask = np.array([antenna_mask(rx_bore, -d) for d in from_tile])
        else:
            rx_mask = np.ones(centers.shape[0])
        const[p] = k_sq / (r_i * r_s) ** 2 * area * cos_ti * tx_mask * rx_mask * rx_gain_scale

        sp = specular_point(tx, rp, wall)
        if sp is not None:
            d_in = sp - tx
            d_out = rp - sp
            len_in = float(np.linalg.norm(d_in))
            len_out = float(np.linalg.norm(d_out))
            cos_sp = -float(np.dot(d_in, n)) / len_in if len_in > 0.0 else 0.0
            # a reflection point at either antenna, or at grazing, is degenerate
            if len_in > 1e-12 and len_out > 1e-12 and cos_sp > 1e-12:
                path_len = len_in + len_out
                theta_sp = math.acos(min(1.0, cos_sp))
                gamma = fresnel_gamma(material.eps_r, theta_sp, polarization)
                rough = rayleigh_factor(material.h_rms, theta_sp, link.wavelength) * gamma
                friis = link.p_t * link.g_t * link.g_r * (link.wavelength / (4.0 * math.pi * path_len)) ** 2
                mask = 1.0
                if apply_antenna_mask:
                    mask = antenna_mask(tx_bore, d_in) * antenna_mask(rx_bore, -d_out)
                spec_power[p] = friis * mask * rough * rough
                spec_length[p] = path_len

    return ScanPattern(
        scene=scene,
        link=link,
        mode=mode,
        tile_theta=tile_theta,
        tile_area=area,
        const=const,
        u_base=u_base,
        v_base=v_base,
        lengths=lengths,
        spec_power=spec_power,
        spec_length=spec_length,
    )


def simulate_point(
    scene: Scene,
    rx: np.ndarray,
    lobe_params: LobeParams,
    link: RadioLink,
    materials: MaterialDatabase | Material,
    tile_edge: float = DEFAULT_TILE_EDGE,
    mode: NormalizationMode = NormalizationMode.HEMISPHERE,
    polarization: Polarization = Polarization.TE,
    apply_antenna_mask: bool = False,
) -> SimResult:
    """Total, specular, and diffuse received power at one receiver position."""
    pattern = build_pattern(
        scene, np.asarray(rx, dtype=float)[None, :], link, materials, tile_edge, mode, polarization, apply_antenna_mask
    )
    total_w, spec_w, diff_w, _, _ = pattern.predict(lobe_params)
    kept, report = pattern.contributions(lobe_params, 0)
    return SimResult(
        total_power_dbm=watts_to_dbm(float(total_w[0])),
        specular_power_dbm=watts_to_dbm(float(spec_w[0])),
        diffuse_power_dbm=watts_to_dbm(float(diff_w[0])),
        contributions=kept,
        gating_report=report,
    )


def simulate_scan(
    scene: Scene,
    scanspec: ScanSpec,
    lobe_params: LobeParams,
    link: RadioLink,
    materials: MaterialDatabase | Material,
    tile_edge: float = DEFAULT_TILE_EDGE,
    mode: NormalizationMode = NormalizationMode.HEMISPHERE,
    polarization: Polarization = Polarization.TE,
    apply_antenna_mask: bool = False,
) -> list[SimRecord]:
    """Simulated scan over the arc/semicylinder, ordered by (delta_h, azimuth)."""
    positions = scan_positions(scene, scanspec)
    pattern = build_pattern(
        scene, np.array([p.position for p in positions]), link, materials, tile_edge, mode, polarization,
        apply_antenna_mask,
    )
    total_w, spec_w, diff_w, _, _ = pattern.predict(lobe_params)
    records = []
    for i, pos in enumerate(positions):
        records.append(
            SimRecord(
                azimuth_deg=pos.azimuth_deg,
                delta_h_cm=height_m_to_cm(pos.delta_h),
                power_dbm=watts_to_dbm(float(total_w[i])),
                specular_dbm=watts_to_dbm(float(spec_w[i])),
                diffuse_dbm=watts_to_dbm(float(diff_w[i])),
            )
        )
    return records


def convergence_probe(
    scene: Scene,
    rx: np.ndarray,
    params: LobeParams,
    link: RadioLink,
    materials: MaterialDatabase | Material,
    edges: tuple[float, ...] = CONVERGENCE_EDGES,
    mode: NormalizationMode = NormalizationMode.HEMISPHERE,
    polarization: Polarization = Polarization.TE,
) -> ConvergenceReport:
    """Total power versus tile edge; converged when the last halving moves < 0.1 dB."""
    entries = []
    rx_arr = np.asarray(rx, dtype=float)[None, :]
    for edge in edges:
        pattern = build_pattern(scene, rx_arr, link, materials, edge, mode, polarization)
        total_w, _, _, _, _ = pattern.predict(params)
        entries.append((edge, float(total_w[0])))
    last, prev = entries[-1][1], entries[-2][1]
    if last == 0.0 and prev == 0.0:
        converged = True
    elif last == 0.0 or prev == 0.0:
        converged = False
    else:
        converged = abs(10.0 * math.log10(prev / last)) < CONVERGENCE_TOL_DB
    return ConvergenceReport(entries=tuple(entries), converged=converged)

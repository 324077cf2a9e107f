"""Command-line interface: theory tables, pattern sweeps, scan simulation, fitting.

Every output file begins with one comment line recording the package
version, the fully resolved configuration, and a digest of each input
file, so identical invocations produce byte-identical files.

Exit codes: 0 success, 1 usage error, 2 input-data error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys

from . import __version__, dbm_to_watts, watts_to_dbm, wavelength_for_frequency
from .fileio import (
    FileFormatError,
    default_materials,
    read_materials,
    read_scan,
    read_scene,
    write_report,
    write_simulated_scan,
)
from .fitting import DegenerateScanError, SearchConfig, compare_models, grid_fit
from .geometry import ScanSpec, paper_scene, scan_positions, patch_angles
from .lobes import Direction, LobeModel, LobeParams, NormalizationMode, RadioLink, pattern_sweep
from .materials import IncidenceContext, Polarization, initial_scattering_coefficient
from .quadrature import QuadratureError
from .raytrace import simulate_scan

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_MODES = {"hemisphere": NormalizationMode.HEMISPHERE, "line": NormalizationMode.PAPER_LINE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()[:12]


def _header(args: argparse.Namespace, inputs: dict[str, str]) -> str:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command") and v is not None}
    config_text = " ".join(f"{k}={v}" for k, v in config.items())
    digest_text = " ".join(f"{name}={_digest(path)}" for name, path in sorted(inputs.items()))
    parts = [f"mmscatter {__version__}", args.command, config_text]
    if digest_text:
        parts.append(f"inputs: {digest_text}")
    return " | ".join(parts)


def _materials_db(args):
    if getattr(args, "materials_file", None):
        return read_materials(args.materials_file)
    return default_materials()


def _input_digests(args) -> dict[str, str]:
    inputs = {}
    for attr in ("materials_file", "scene", "scan"):
        path = getattr(args, attr, None)
        if path:
            inputs[attr] = path
    return inputs


def _link(args) -> RadioLink:
    gain = 10.0 ** (args.gain_dbi / 10.0)
    return RadioLink(
        p_t=dbm_to_watts(args.p_t_dbm),
        g_t=gain,
        g_r=gain,
        wavelength=wavelength_for_frequency(args.freq_ghz * 1e9),
    )


def _material_names(args, db) -> list[str]:
    if args.material == "all":
        return db.names()
    db.get(args.material)
    return [args.material]


def _theta_grid(args) -> list[float]:
    grid = []
    theta = args.theta_min
    while theta <= args.theta_max + 1e-9:
        grid.append(round(theta, 10))
        theta += args.theta_step
    return grid


def _resolve_scene(args, db):
    """Scene from --scene, else the default layout from --material/--theta-deg."""
    inline_spec = None
    if getattr(args, "scene", None):
        scene, inline_spec = read_scene(args.scene)
    else:
        scene = paper_scene(args.material, args.theta_deg, frequency_hz=args.freq_ghz * 1e9)
    db.get(scene.wall.material)
    return scene, inline_spec


def _resolve_scanspec(args, inline_spec) -> ScanSpec:
    base = inline_spec if inline_spec is not None else ScanSpec()
    heights = base.height_offsets
    if args.heights is not None:
        heights = tuple(float(tok) for tok in args.heights.split(","))
    return ScanSpec(
        radius=args.radius if args.radius is not None else base.radius,
        azimuth_step_deg=args.step_deg if args.step_deg is not None else base.azimuth_step_deg,
        azimuth_range_deg=args.range_deg if args.range_deg is not None else base.azimuth_range_deg,
        height_offsets=heights,
    )


def _theoretical_s(scene, db, args) -> float:
    material = db.get(scene.wall.material)
    ctx = IncidenceContext(
        theta_i=scene.incidence_angle,
        wavelength=wavelength_for_frequency(args.freq_ghz * 1e9),
        polarization=Polarization[args.pol],
    )
    return initial_scattering_coefficient(material, ctx).s_coeff


def _lobe_params(args, s_coeff: float) -> LobeParams:
    if args.model == "single":
        return LobeParams(model=LobeModel.SINGLE_LOBE, s_coeff=s_coeff, alpha_r=args.alpha_r)
    return LobeParams(
        model=LobeModel.DUAL_LOBE,
        s_coeff=s_coeff,
        alpha_r=args.alpha_r,
        alpha_i=args.alpha_i,
        lambda_mix=args.lambda_mix,
    )


def _write_csv(path, header_comment: str, columns: str, rows) -> None:
    lines = [f"# {header_comment}", columns]
    lines.extend(rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


# --- subcommands ---------------------------------------------------------------


def _cmd_theory(args) -> int:
    db = _materials_db(args)
    wavelength = wavelength_for_frequency(args.freq_ghz * 1e9)
    rows = []
    for name in _material_names(args, db):
        material = db.get(name)
        for theta_deg in _theta_grid(args):
            ctx = IncidenceContext(
                theta_i=math.radians(theta_deg), wavelength=wavelength, polarization=Polarization[args.pol]
            )
            bundle = initial_scattering_coefficient(material, ctx)
            rows.append(
                f"{name},{theta_deg!r},{bundle.gamma!r},{bundle.rayleigh_r!r},"
                f"{bundle.gamma_rough!r},{bundle.s_coeff!r}"
            )
    _write_csv(
        args.out,
        _header(args, _input_digests(args)),
        "material,theta_i_deg,gamma,rayleigh_r,gamma_rough,s_coeff",
        rows,
    )
    return EXIT_OK


def _cmd_pattern(args) -> int:
    db = _materials_db(args)
    link = _link(args)
    theta_grid = _theta_grid(args)
    template = _lobe_params(args, 0.0)
    header = _header(args, _input_digests(args)) + " | extent=unit-patch"
    all_lines = [f"# {header}", "theta_i_deg,direction,p_r_dbm,model,material"]
    for name in _material_names(args, db):
        material = db.get(name)
        for direction in (Direction.INCIDENT, Direction.SPECULAR):
            rows = pattern_sweep(
                material,
                template,
                link,
                direction,
                theta_grid,
                mode=_MODES[args.mode],
                polarization=Polarization[args.pol],
                fixed_s=args.s,
            )
            for row in rows:
                all_lines.append(
                    f"{row.theta_i_deg!r},{row.direction.value},{watts_to_dbm(row.p_r_watts)!r},"
                    f"{template.model.value},{name}"
                )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(all_lines))
        fh.write("\n")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    db = _materials_db(args)
    scene, inline_spec = _resolve_scene(args, db)
    spec = _resolve_scanspec(args, inline_spec)
    link = _link(args)
    s_coeff = args.s if args.s is not None else _theoretical_s(scene, db, args)
    params = _lobe_params(args, s_coeff)
    records = simulate_scan(
        scene, spec, params, link, db, args.tiles_m, _MODES[args.mode], Polarization[args.pol]
    )
    header = _header(args, _input_digests(args)) + " | extent=tile-area"
    write_simulated_scan(records, args.out, header_comment=header)
    return EXIT_OK


def _cmd_fit(args) -> int:
    db = _materials_db(args)
    scene, inline_spec = _resolve_scene(args, db)
    scan = read_scan(args.scan)
    link = _link(args)
    s_initial = args.s_initial if args.s_initial is not None else _theoretical_s(scene, db, args)
    cfg = SearchConfig(
        link=link,
        materials=db,
        scan_radius=args.radius if args.radius is not None else 1.5,
        tile_edge=args.tiles_m,
        mode=_MODES[args.mode],
        polarization=Polarization[args.pol],
        max_rounds=args.max_rounds,
    )
    header = _header(args, _input_digests(args))
    if args.model == "both":
        comparison = compare_models(scan, scene, link, s_initial, cfg, plane_only=args.plane_only)
        stem, dot, suffix = args.out.rpartition(".")
        base = stem if dot else args.out
        ext = f".{suffix}" if dot else ""
        write_report(comparison.single, f"{base}.single{ext}", header_comment=header)
        write_report(comparison.dual, f"{base}.dual{ext}", header_comment=header)
        winner = comparison.single if comparison.winner is LobeModel.SINGLE_LOBE else comparison.dual
        write_report(winner, args.out, header_comment=header)
        print(
            f"single FVU {comparison.single.fvu!r} | dual FVU {comparison.dual.fvu!r} | winner {comparison.winner.value}"
        )
        return EXIT_OK if (comparison.single.converged and comparison.dual.converged) else EXIT_NUMERIC
    kind = LobeModel.SINGLE_LOBE if args.model == "single" else LobeModel.DUAL_LOBE
    report = grid_fit(scan, scene, kind, s_initial, cfg, plane_only=args.plane_only)
    write_report(report, args.out, header_comment=header)
    print(f"{kind.value} FVU {report.fvu!r} (converged={report.converged})")
    return EXIT_OK if report.converged else EXIT_NUMERIC


def _cmd_angles(args) -> int:
    db = _materials_db(args)
    scene, inline_spec = _resolve_scene(args, db)
    spec = _resolve_scanspec(args, inline_spec)
    rows = []
    for pos in scan_positions(scene, spec):
        geom = patch_angles(scene.tx, pos.position, scene.wall.center, scene.wall.normal)
        rows.append(
            f"{pos.azimuth_deg!r},{pos.delta_h!r},{geom.r_i!r},{geom.r_s!r},"
            f"{math.degrees(geom.theta_i)!r},{math.degrees(geom.theta_s)!r},"
            f"{math.degrees(geom.psi_r)!r},{math.degrees(geom.psi_i)!r}"
        )
    _write_csv(
        args.out,
        _header(args, _input_digests(args)),
        "azimuth_deg,delta_h_m,r_i_m,r_s_m,theta_i_deg,theta_s_deg,psi_r_deg,psi_i_deg",
        rows,
    )
    return EXIT_OK


# --- parser ---------------------------------------------------------------------


def _add_shared(parser, with_scene: bool = False) -> None:
    parser.add_argument("--materials-file", help="material database file (default: built-in table)")
    parser.add_argument("--freq-ghz", type=float, default=28.0, help="carrier frequency (default 28)")
    parser.add_argument("--pol", choices=("TE", "TM"), default="TE", help="polarization for Gamma (default TE)")
    parser.add_argument("--out", required=True, help="output file path")
    if with_scene:
        parser.add_argument("--scene", help="scene file (overrides --material/--theta-deg)")
        parser.add_argument("--material", default="rough_wall", help="wall material name (default rough_wall)")
        parser.add_argument("--theta-deg", type=float, default=30.0, help="incidence angle, degrees (default 30)")


def _add_link(parser) -> None:
    parser.add_argument("--p-t-dbm", type=float, default=10.0, help="transmit power, dBm (default 10)")
    parser.add_argument("--gain-dbi", type=float, default=15.0, help="Tx/Rx antenna gain, dBi (default 15)")


def _add_model(parser, default_model: str) -> None:
    parser.add_argument("--model", choices=("single", "dual"), default=default_model)
    parser.add_argument("--alpha-r", type=int, default=4, help="forward lobe width factor (default 4)")
    parser.add_argument("--alpha-i", type=int, default=10, help="backscatter lobe width factor (default 10)")
    parser.add_argument("--lambda", dest="lambda_mix", type=float, default=0.2, help="forward/backscatter mix (default 0.2)")
    parser.add_argument("--mode", choices=tuple(_MODES), default="hemisphere", help="lobe normalization mode")


def _add_scan_layout(parser) -> None:
    parser.add_argument("--radius", type=float, default=None, help="scan radius, m (default 1.5)")
    parser.add_argument("--step-deg", type=float, default=None, help="azimuth step, degrees (default 10)")
    parser.add_argument("--range-deg", type=float, default=None, help="azimuth range, degrees (default 180)")
    parser.add_argument("--heights", default=None, help="comma-separated height offsets in m (default 0)")


def build_parser() -> _Parser:
    parser = _Parser(prog="mmscatter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("theory", help="reflection/roughness/scattering tables per material")
    p.add_argument("--material", default="all", help="material name, or 'all' (default)")
    p.add_argument("--theta-min", type=float, default=1.0)
    p.add_argument("--theta-max", type=float, default=89.0)
    p.add_argument("--theta-step", type=float, default=1.0)
    _add_shared(p)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("pattern", help="scattered power vs incidence angle sweeps")
    p.add_argument("--material", default="all", help="material name, or 'all' (default)")
    p.add_argument("--s", type=float, default=None, help="fixed scattering coefficient (default: per-angle theory)")
    p.add_argument("--theta-min", type=float, default=1.0)
    p.add_argument("--theta-max", type=float, default=89.0)
    p.add_argument("--theta-step", type=float, default=1.0)
    _add_model(p, default_model="single")
    _add_link(p)
    _add_shared(p)
    p.set_defaults(func=_cmd_pattern)

    p = sub.add_parser("simulate", help="simulate an arc/semicylinder scan")
    p.add_argument("--s", type=float, default=None, help="scattering coefficient (default: theoretical value)")
    p.add_argument("--tiles-m", type=float, default=0.1, help="wall tile edge, m (default 0.1)")
    _add_model(p, default_model="single")
    _add_scan_layout(p)
    _add_link(p)
    _add_shared(p, with_scene=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit lobe-model parameters to a scan")
    p.add_argument("--scan", required=True, help="scan CSV to fit")
    p.add_argument("--s-initial", type=float, default=None, help="initial scattering coefficient (default: theory)")
    p.add_argument("--plane-only", action="store_true", help="fit only delta_h = 0 records")
    p.add_argument("--tiles-m", type=float, default=0.1, help="wall tile edge, m (default 0.1)")
    p.add_argument("--max-rounds", type=int, default=10, help="alternation round budget (default 10)")
    p.add_argument("--model", choices=("single", "dual", "both"), default="both")
    p.add_argument("--alpha-r", type=int, default=4, help=argparse.SUPPRESS)
    p.add_argument("--alpha-i", type=int, default=10, help=argparse.SUPPRESS)
    p.add_argument("--lambda", dest="lambda_mix", type=float, default=0.2, help=argparse.SUPPRESS)
    p.add_argument("--mode", choices=tuple(_MODES), default="hemisphere", help="lobe normalization mode")
    p.add_argument("--radius", type=float, default=None, help="scan radius, m (default 1.5)")
    _add_link(p)
    _add_shared(p, with_scene=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("angles", help="dump per-position scattering geometry")
    _add_scan_layout(p)
    _add_shared(p, with_scene=True)
    p.set_defaults(func=_cmd_angles)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (FileFormatError, FileNotFoundError, IsADirectoryError, DegenerateScanError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except QuadratureError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""File formats: scan CSVs, the material database, scene files, fit reports.

All formats are line-oriented UTF-8 text with LF line endings and
locale-independent number formatting (shortest representation that parses
back to the identical float, never fewer than the digits needed for an
exact round trip). Comment lines start with '#'. Readers reject trailing
garbage and report 1-based line numbers.

Scan CSV: header `angle_deg,delta_h_cm,power_dbm`, one record per receiver
position. Azimuth 0 is the wall normal at the wall center; positive angles
lie on the specular side. Simulated scans append `specular_dbm,diffuse_dbm`
columns; readers accept either shape and use the first three columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

from .geometry import ScanSpec, Scene, Wall
from .lobes import LobeModel, LobeParams
from .materials import Material, MaterialDatabase

__all__ = [
    "FileFormatError",
    "ScanPoint",
    "Scan",
    "height_m_to_cm",
    "read_scan",
    "write_scan",
    "write_simulated_scan",
    "scan_from_records",
    "read_materials",
    "default_materials",
    "write_report",
    "read_report",
    "read_scene",
]

SCAN_HEADER = "angle_deg,delta_h_cm,power_dbm"
SIM_SCAN_HEADER = "angle_deg,delta_h_cm,power_dbm,specular_dbm,diffuse_dbm"

_LENGTH_UNITS = {"m": 1.0, "cm": 1e-2, "mm": 1e-3}


class FileFormatError(ValueError):
    """Malformed input file; message carries `path:line:`."""


def _err(source: str, lineno: int, message: str) -> FileFormatError:
    return FileFormatError(f"{source}:{lineno}: {message}")


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(token: str, source: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise _err(source, lineno, f"non-numeric {what}: {token!r}") from None
    if math.isnan(value):
        raise _err(source, lineno, f"{what} must not be NaN")
    return value


def height_m_to_cm(delta_h_m: float) -> float:
    """Height offset in the scan-file unit; quantized to 1e-9 cm so the
    common decimal heights (0.1 m, 0.2 m, ...) convert without float dust."""
    return round(delta_h_m * 100.0, 9)


@dataclass(frozen=True)
class ScanPoint:
    """One receiver sample. delta_h is stored in the file unit (cm) so a
    read-write cycle preserves the file bytes; delta_h_m derives from it."""

    azimuth_deg: float
    delta_h_cm: float
    power_dbm: float

    def __post_init__(self):
        if not -90.0 <= self.azimuth_deg <= 90.0:
            raise ValueError(f"azimuth must be in [-90, 90] deg, got {self.azimuth_deg}")

    @property
    def delta_h_m(self) -> float:
        return self.delta_h_cm * 0.01

    @property
    def key(self) -> tuple[float, float]:
        return (self.azimuth_deg, self.delta_h_cm)


@dataclass(frozen=True)
class Scan:
    """Ordered receiver samples; position keys are unique and M >= 2."""

    points: tuple[ScanPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < 2:
            raise ValueError(f"a scan needs at least 2 points, got {len(self.points)}")
        seen = set()
        for pt in self.points:
            if pt.key in seen:
                raise ValueError(f"duplicate scan position {pt.key}")
            seen.add(pt.key)

    def __len__(self) -> int:
        return len(self.points)

    def powers_dbm(self) -> list[float]:
        return [pt.power_dbm for pt in self.points]

    def plane_only(self) -> "Scan":
        kept = tuple(pt for pt in self.points if pt.delta_h_cm == 0.0)
        if len(kept) < 2:
            raise ValueError("fewer than 2 in-plane (delta_h = 0) points in scan")
        return Scan(points=kept)


def _read_lines(path) -> list[tuple[int, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    raw = text.split("\n")
    if raw and raw[-1] == "":
        raw.pop()
    return [(i + 1, line) for i, line in enumerate(raw)]


def read_scan(path) -> Scan:
    """Parse and validate a scan CSV (measured 3-column or simulated 5-column)."""
    source = str(path)
    lines = [(no, ln) for no, ln in _read_lines(path) if not ln.startswith("#")]
    if not lines:
        raise FileFormatError(f"{source}: empty scan file")
    header_no, header = lines[0]
    if header not in (SCAN_HEADER, SIM_SCAN_HEADER):
        raise _err(source, header_no, f"bad header {header!r}; expected {SCAN_HEADER!r}")
    n_cols = len(header.split(","))
    points = []
    seen: dict[tuple[float, float], int] = {}
    for no, line in lines[1:]:
        fields = line.split(",")
        if len(fields) != n_cols:
            raise _err(source, no, f"expected {n_cols} fields, got {len(fields)}")
        values = [_parse_float(tok, source, no, name) for tok, name in zip(fields, header.split(","))]
        try:
            point = ScanPoint(azimuth_deg=values[0], delta_h_cm=values[1], power_dbm=values[2])
        except ValueError as exc:
            raise _err(source, no, str(exc)) from None
        if point.key in seen:
            raise _err(source, no, f"duplicate position {point.key} (first at line {seen[point.key]})")
        seen[point.key] = no
        points.append(point)
    if not points:
        raise FileFormatError(f"{source}: scan file has a header but no records")
    try:
        return Scan(points=tuple(points))
    except ValueError as exc:
        raise FileFormatError(f"{source}: {exc}") from None


def write_scan(scan: Scan, path, header_comment: str | None = None) -> None:
    lines = []
    if header_comment is not None:
        lines.append(f"# {header_comment}")
    lines.append(SCAN_HEADER)
    for pt in scan.points:
        lines.append(f"{_fmt(pt.azimuth_deg)},{_fmt(pt.delta_h_cm)},{_fmt(pt.power_dbm)}")
    _write_text(path, lines)


def write_simulated_scan(records, path, header_comment: str | None = None) -> None:
    """Write simulate() output; same shape as a measured scan plus the split columns."""
    lines = []
    if header_comment is not None:
        lines.append(f"# {header_comment}")
    lines.append(SIM_SCAN_HEADER)
    for rec in records:
        lines.append(
            f"{_fmt(rec.azimuth_deg)},{_fmt(rec.delta_h_cm)},{_fmt(rec.power_dbm)},"
            f"{_fmt(rec.specular_dbm)},{_fmt(rec.diffuse_dbm)}"
        )
    _write_text(path, lines)


def scan_from_records(records) -> Scan:
    """Scan view of simulated records (drops the specular/diffuse split)."""
    return Scan(
        points=tuple(
            ScanPoint(azimuth_deg=r.azimuth_deg, delta_h_cm=r.delta_h_cm, power_dbm=r.power_dbm) for r in records
        )
    )


def _write_text(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


# --- material database ------------------------------------------------------

_MATERIAL_KEYS = {"eps_r": None, "h_rms_mm": "mm", "thickness_cm": "cm"}


def _parse_length(token: str, default_unit: str, source: str, lineno: int, what: str) -> float:
    parts = token.split()
    if len(parts) == 1:
        unit = default_unit
    elif len(parts) == 2:
        unit = parts[1]
        if unit not in _LENGTH_UNITS:
            raise _err(source, lineno, f"unknown unit {unit!r} for {what} (use m, cm, or mm)")
    else:
        raise _err(source, lineno, f"malformed {what} value {token!r}")
    return _parse_float(parts[0], source, lineno, what) * _LENGTH_UNITS[unit]


def _parse_materials(lines, source: str) -> MaterialDatabase:
    db = MaterialDatabase()
    current_name = None
    current_line = 0
    fields: dict[str, float] = {}

    def finish():
        nonlocal current_name, fields
        if current_name is None:
            return
        missing = [k for k in _MATERIAL_KEYS if k not in fields]
        if missing:
            raise _err(source, current_line, f"material {current_name!r} is missing {', '.join(missing)}")
        try:
            db.add(
                Material(
                    name=current_name,
                    eps_r=fields["eps_r"],
                    h_rms=fields["h_rms_mm"],
                    thickness=fields["thickness_cm"],
                )
            )
        except ValueError as exc:
            raise _err(source, current_line, str(exc)) from None
        current_name = None
        fields = {}

    for no, raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if key == "material":
            finish()
            if not value:
                raise _err(source, no, "material record needs a name")
            current_name = value
            current_line = no
        elif key in _MATERIAL_KEYS:
            if current_name is None:
                raise _err(source, no, f"{key} outside a material record")
            if key in fields:
                raise _err(source, no, f"duplicate key {key} for material {current_name!r}")
            unit = _MATERIAL_KEYS[key]
            if unit is None:
                fields[key] = _parse_float(value, source, no, key)
            else:
                fields[key] = _parse_length(value, unit, source, no, key)
        else:
            raise _err(source, no, f"unknown key {key!r}")
    finish()
    if len(db) == 0:
        raise FileFormatError(f"{source}: no material records found")
    return db


def read_materials(path) -> MaterialDatabase:
    """Parse a material database file (see data/materials.txt for the format)."""
    return _parse_materials(_read_lines(path), str(path))


def default_materials() -> MaterialDatabase:
    """The shipped four-surface database."""
    text = resources.files("mmscatter").joinpath("data/materials.txt").read_text(encoding="utf-8")
    raw = text.split("\n")
    if raw and raw[-1] == "":
        raw.pop()
    return _parse_materials([(i + 1, ln) for i, ln in enumerate(raw)], "<builtin materials>")


# --- scene files -------------------------------------------------------------

_SCENE_SCALARS = {"frequency_ghz", "wall_width_m", "wall_height_m"}
_SCENE_VECTORS = {"wall_center", "wall_normal", "tx"}
_SCENE_SCAN_KEYS = {"scan_radius_m", "scan_step_deg", "scan_range_deg", "scan_heights_m"}


def read_scene(path) -> tuple[Scene, ScanSpec | None]:
    """Parse a scene file; returns the scene and an optional inline scan spec."""
    source = str(path)
    values: dict[str, object] = {}
    for no, raw in _read_lines(path):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "material":
            values[key] = rest
        elif key in _SCENE_SCALARS or key in {"scan_radius_m", "scan_step_deg", "scan_range_deg"}:
            values[key] = _parse_float(rest, source, no, key)
        elif key in _SCENE_VECTORS or key == "scan_heights_m":
            tokens = rest.split()
            vec = [_parse_float(t, source, no, key) for t in tokens]
            if key in _SCENE_VECTORS and len(vec) != 3:
                raise _err(source, no, f"{key} needs 3 components, got {len(vec)}")
            values[key] = vec
        else:
            raise _err(source, no, f"unknown key {key!r}")
    required = {"material", "frequency_ghz", "wall_center", "wall_normal", "wall_width_m", "wall_height_m", "tx"}
    missing = sorted(required - values.keys())
    if missing:
        raise FileFormatError(f"{source}: missing keys: {', '.join(missing)}")
    try:
        wall = Wall(
            center=values["wall_center"],
            normal=values["wall_normal"],
            width=values["wall_width_m"],
            height=values["wall_height_m"],
            material=values["material"],
        )
        scene = Scene(wall=wall, tx=values["tx"], carrier_frequency=values["frequency_ghz"] * 1e9)
    except ValueError as exc:
        raise FileFormatError(f"{source}: {exc}") from None
    if values.keys() & _SCENE_SCAN_KEYS:
        try:
            spec = ScanSpec(
                radius=values.get("scan_radius_m", 1.5),
                azimuth_step_deg=values.get("scan_step_deg", 10.0),
                azimuth_range_deg=values.get("scan_range_deg", 180.0),
                height_offsets=tuple(values.get("scan_heights_m", (0.0,))),
            )
        except ValueError as exc:
            raise FileFormatError(f"{source}: {exc}") from None
        return scene, spec
    return scene, None


# --- fit reports --------------------------------------------------------------

_TRACE_HEADER = "round stage model s_coeff alpha_r alpha_i lambda_mix fvu"


def _params_tokens(params) -> list[str]:
    if params.alpha_i is None:
        return [params.model.value, _fmt(params.s_coeff), str(params.alpha_r), "-", "-"]
    return [
        params.model.value,
        _fmt(params.s_coeff),
        str(params.alpha_r),
        str(params.alpha_i),
        _fmt(params.lambda_mix),
    ]


def _params_from_tokens(tokens, source: str, lineno: int) -> LobeParams:
    model_token, s_token, ar_token, ai_token, lam_token = tokens
    try:
        model = LobeModel(model_token)
    except ValueError:
        raise _err(source, lineno, f"unknown model {model_token!r}") from None
    s_value = _parse_float(s_token, source, lineno, "s_coeff")
    alpha_r = int(_parse_float(ar_token, source, lineno, "alpha_r"))
    if ai_token == "-":
        return LobeParams(model=model, s_coeff=s_value, alpha_r=alpha_r)
    alpha_i = int(_parse_float(ai_token, source, lineno, "alpha_i"))
    lam = _parse_float(lam_token, source, lineno, "lambda_mix")
    return LobeParams(model=model, s_coeff=s_value, alpha_r=alpha_r, alpha_i=alpha_i, lambda_mix=lam)


def write_report(report, path, header_comment: str | None = None) -> None:
    """Serialize a FitReport; read_report(write_report(r)) == r."""
    lines = []
    if header_comment is not None:
        lines.append(f"# {header_comment}")
    best = report.best
    lines.append("best " + " ".join(_params_tokens(best)))
    lines.append(f"fvu {_fmt(report.fvu)}")
    lines.append(f"s_initial {_fmt(report.s_initial)}")
    lines.append(f"plane_only {'true' if report.plane_only else 'false'}")
    lines.append(f"converged {'true' if report.converged else 'false'}")
    lines.append(f"trace {len(report.trace)}")
    lines.append(_TRACE_HEADER)
    for entry in report.trace:
        lines.append(f"{entry.round} {entry.stage} " + " ".join(_params_tokens(entry.params)) + f" {_fmt(entry.fvu)}")
    _write_text(path, lines)


def read_report(path):
    from .fitting import FitReport, TraceEntry  # deferred: fitting imports this module

    source = str(path)
    lines = [(no, ln) for no, ln in _read_lines(path) if not ln.startswith("#")]
    fields: dict[str, object] = {}
    trace_rows: list = []
    expect_trace = None
    in_trace = False
    for no, line in lines:
        if not in_trace:
            key, _, rest = line.partition(" ")
            rest = rest.strip()
            if key == "best":
                tokens = rest.split()
                if len(tokens) != 5:
                    raise _err(source, no, "malformed best-parameters line")
                fields["best"] = _params_from_tokens(tokens, source, no)
            elif key in ("fvu", "s_initial"):
                fields[key] = _parse_float(rest, source, no, key)
            elif key in ("plane_only", "converged"):
                if rest not in ("true", "false"):
                    raise _err(source, no, f"{key} must be true or false, got {rest!r}")
                fields[key] = rest == "true"
            elif key == "trace":
                expect_trace = int(_parse_float(rest, source, no, "trace count"))
                in_trace = True
            else:
                raise _err(source, no, f"unknown key {key!r}")
        elif line == _TRACE_HEADER:
            continue
        else:
            tokens = line.split()
            if len(tokens) != 8:
                raise _err(source, no, f"expected 8 trace fields, got {len(tokens)}")
            trace_rows.append(
                TraceEntry(
                    round=int(tokens[0]),
                    stage=tokens[1],
                    params=_params_from_tokens(tokens[2:7], source, no),
                    fvu=_parse_float(tokens[7], source, no, "fvu"),
                )
            )
    missing = sorted({"best", "fvu", "s_initial", "plane_only", "converged"} - fields.keys())
    if missing:
        raise FileFormatError(f"{source}: missing keys: {', '.join(missing)}")
    if expect_trace is None or expect_trace != len(trace_rows):
        raise FileFormatError(f"{source}: trace row count mismatch (declared {expect_trace}, got {len(trace_rows)})")
    return FitReport(
        best=fields["best"],
        fvu=fields["fvu"],
        s_initial=fields["s_initial"],
        trace=tuple(trace_rows),
        plane_only=fields["plane_only"],
        converged=fields["converged"],
    )



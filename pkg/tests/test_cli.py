import math

import pytest

from mmscatter import wavelength_for_frequency
from mmscatter.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main
from mmscatter.fileio import read_report, read_scan, write_scan
from mmscatter.materials import rayleigh_factor


def run(*argv):
    return main(list(argv))


def test_theory_rough_wall_row(tmp_path):
    out = tmp_path / "theory.csv"
    assert run("theory", "--material", "rough_wall", "--out", str(out)) == EXIT_OK
    rows = [ln for ln in out.read_text().splitlines() if ln.startswith("rough_wall,30.0,")]
    assert len(rows) == 1
    _, _, gamma, rayleigh, gamma_rough, s_coeff = rows[0].split(",")
    expected_r = rayleigh_factor(0.715e-3, math.radians(30.0), wavelength_for_frequency(28e9))
    assert float(rayleigh) == expected_r
    assert float(rayleigh) == pytest.approx(0.7817, abs=1e-3)
    assert float(gamma_rough) == float(rayleigh) * float(gamma)
    assert 0.0 < float(s_coeff) < 1.0


def test_theory_has_header_comment(tmp_path):
    out = tmp_path / "theory.csv"
    run("theory", "--material", "metal_sheet", "--out", str(out))
    first = out.read_text().splitlines()[0]
    assert first.startswith("# mmscatter 0.1.0 | theory |")


def test_simulate_then_fit_recovers_exactly(tmp_path):
    sim = tmp_path / "sim.csv"
    assert (
        run(
            "simulate", "--material", "rough_wall", "--theta-deg", "30", "--model", "single",
            "--s", "0.3", "--alpha-r", "4", "--tiles-m", "0.5", "--out", str(sim),
        )
        == EXIT_OK
    )
    report_path = tmp_path / "fit.txt"
    assert (
        run(
            "fit", "--scan", str(sim), "--material", "rough_wall", "--theta-deg", "30",
            "--model", "single", "--s-initial", "0.3", "--tiles-m", "0.5", "--out", str(report_path),
        )
        == EXIT_OK
    )
    report = read_report(report_path)
    assert report.fvu == 0.0
    assert report.best.s_coeff == 0.3
    assert report.best.alpha_r == 4
    assert report.converged


def test_fit_both_writes_three_reports(tmp_path):
    sim = tmp_path / "sim.csv"
    run(
        "simulate", "--material", "rough_wall", "--theta-deg", "30", "--model", "dual",
        "--s", "0.35", "--alpha-r", "1", "--alpha-i", "10", "--lambda", "0.2",
        "--tiles-m", "0.5", "--out", str(sim),
    )
    out = tmp_path / "fit.txt"
    code = run(
        "fit", "--scan", str(sim), "--material", "rough_wall", "--theta-deg", "30",
        "--model", "both", "--s-initial", "0.35", "--tiles-m", "0.5", "--out", str(out),
    )
    assert code == EXIT_OK
    assert out.exists()
    assert (tmp_path / "fit.single.txt").exists()
    assert (tmp_path / "fit.dual.txt").exists()
    dual_report = read_report(tmp_path / "fit.dual.txt")
    assert dual_report.fvu == 0.0
    winner = read_report(out)
    assert winner == dual_report


def test_pattern_dual_lambda(tmp_path):
    out = tmp_path / "pattern.csv"
    assert (
        run(
            "pattern", "--material", "rough_wall", "--model", "dual", "--lambda", "0.2",
            "--theta-min", "10", "--theta-max", "80", "--theta-step", "10", "--out", str(out),
        )
        == EXIT_OK
    )
    lines = out.read_text().splitlines()
    assert lines[1] == "theta_i_deg,direction,p_r_dbm,model,material"
    rows = lines[2:]
    assert len(rows) == 8 * 2  # both directions
    assert all(row.endswith(",dual,rough_wall") for row in rows)


def test_angles_dump(tmp_path):
    out = tmp_path / "angles.csv"
    assert run("angles", "--material", "rough_wall", "--theta-deg", "30", "--out", str(out)) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[1].startswith("azimuth_deg,")
    assert len(lines) == 2 + 19
    at_specular = [ln for ln in lines if ln.startswith("30.0,")][0]
    psi_r_deg = float(at_specular.split(",")[6])
    assert abs(psi_r_deg) < 1e-9


def test_simulate_respects_scene_file(tmp_path):
    scene = tmp_path / "scene.txt"
    scene.write_text(
        "material rough_wall\nfrequency_ghz 28\nwall_center 0 0 0\nwall_normal 1 0 0\n"
        "wall_width_m 3\nwall_height_m 3\ntx 1.299038105676658 -0.75 0\n"
        "scan_heights_m 0 0.1\n",
        encoding="utf-8",
    )
    out = tmp_path / "sim.csv"
    assert run("simulate", "--scene", str(scene), "--s", "0.3", "--tiles-m", "0.5", "--out", str(out)) == EXIT_OK
    scan = read_scan(out)
    assert len(scan) == 38  # two heights from the scene file


def test_usage_error_exit_code(tmp_path):
    assert run("simulate", "--no-such-flag") == EXIT_USAGE
    assert run("frobnicate") == EXIT_USAGE


def test_missing_scan_is_data_error(tmp_path):
    assert (
        run("fit", "--scan", str(tmp_path / "missing.csv"), "--material", "rough_wall", "--out", str(tmp_path / "r.txt"))
        == EXIT_DATA
    )


def test_unknown_material_is_data_error(tmp_path):
    assert run("theory", "--material", "kryptonite", "--out", str(tmp_path / "t.csv")) == EXIT_DATA


def test_malformed_scan_is_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("angle_deg,delta_h_cm,power_dbm\n10.0,0.0,abc\n", encoding="utf-8")
    assert (
        run("fit", "--scan", str(bad), "--material", "rough_wall", "--out", str(tmp_path / "r.txt")) == EXIT_DATA
    )


def test_nonconvergence_exit_code(tmp_path):
    # a scan the model cannot reproduce, with a round budget too small to
    # observe the improvement threshold, reports numerical non-convergence
    sim = tmp_path / "sim.csv"
    run(
        "simulate", "--material", "rough_wall", "--theta-deg", "30", "--model", "dual",
        "--s", "0.35", "--alpha-r", "2", "--alpha-i", "9", "--lambda", "0.2",
        "--tiles-m", "0.5", "--out", str(sim),
    )
    scan = read_scan(sim)
    noisy_points = tuple(
        type(pt)(pt.azimuth_deg, pt.delta_h_cm, pt.power_dbm + (2.0 if i % 2 else -2.0))
        for i, pt in enumerate(scan.points)
    )
    noisy = tmp_path / "noisy.csv"
    write_scan(type(scan)(points=noisy_points), noisy)
    code = run(
        "fit", "--scan", str(noisy), "--material", "rough_wall", "--theta-deg", "30",
        "--model", "dual", "--s-initial", "0.35", "--tiles-m", "0.5", "--max-rounds", "1",
        "--out", str(tmp_path / "r.txt"),
    )
    assert code == EXIT_NUMERIC
    report = read_report(tmp_path / "r.txt")
    assert not report.converged
    assert report.fvu > 0.0


def test_constant_scan_is_data_error(tmp_path):
    flat = tmp_path / "flat.csv"
    flat.write_text(
        "angle_deg,delta_h_cm,power_dbm\n0.0,0.0,-60.0\n10.0,0.0,-60.0\n20.0,0.0,-60.0\n", encoding="utf-8"
    )
    assert (
        run("fit", "--scan", str(flat), "--material", "rough_wall", "--model", "single",
            "--s-initial", "0.3", "--tiles-m", "0.5", "--out", str(tmp_path / "r.txt"))
        == EXIT_DATA
    )


def test_help_exits_zero():
    with pytest.raises(SystemExit) as info:
        run("--help")
    assert info.value.code == 0


def test_pattern_line_mode(tmp_path):
    out = tmp_path / "p.csv"
    assert (
        run("pattern", "--material", "metal_sheet", "--mode", "line",
            "--theta-min", "20", "--theta-max", "40", "--theta-step", "10", "--out", str(out))
        == EXIT_OK
    )
    assert len(out.read_text().splitlines()) == 2 + 3 * 2


def test_repeat_runs_byte_identical(tmp_path):
    sim = tmp_path / "sim.csv"
    args = (
        "simulate", "--material", "smooth_wall", "--theta-deg", "30", "--model", "single",
        "--s", "0.25", "--tiles-m", "0.5", "--out", str(sim),
    )
    run(*args)
    first = sim.read_bytes()
    run(*args)
    assert sim.read_bytes() == first


def test_fit_header_records_input_digest(tmp_path):
    sim = tmp_path / "sim.csv"
    run("simulate", "--material", "rough_wall", "--s", "0.3", "--tiles-m", "0.5", "--out", str(sim))
    out = tmp_path / "fit.txt"
    run(
        "fit", "--scan", str(sim), "--material", "rough_wall", "--model", "single",
        "--s-initial", "0.3", "--tiles-m", "0.5", "--out", str(out),
    )
    first = out.read_text().splitlines()[0]
    assert first.startswith("# mmscatter")
    assert "inputs: scan=" in first

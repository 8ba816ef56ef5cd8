import json

import pandas as pd
import pytest

from app.cli import main
from app.core.config import load_settings, settings
from app.core.constants import MEASURED_LINEWIDTH_MHZ, SHORT_CAVITY_FINESSE, SHORT_CAVITY_LOSS_PPM


def run_json(capsys, *argv):
    assert main([*argv, "--format", "json"]) == 0
    return json.loads(capsys.readouterr().out)


def test_design_pc_f(capsys):
    report = run_json(capsys, "design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "8.7",
                      "--lambda-nm", "1276")
    assert report["waist_um"] == pytest.approx(3.05, abs=0.02)
    assert report["volume_lambda3"] == pytest.approx(30.8, abs=0.3)
    assert report["length_um"] == pytest.approx(8.7)
    assert report["finesse"] < report["finesse_approx"]


def test_design_cc_a(capsys):
    report = run_json(capsys, "design", "--topology", "cc", "--roc-um", "105.6", "--length-um", "27.4",
                      "--lambda-nm", "1280")
    assert report["waist_um"] == pytest.approx(3.79, abs=0.02)
    assert report["volume_lambda3"] == pytest.approx(148.2, abs=0.3)


def test_design_loss_override(capsys):
    report = run_json(capsys, "design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "8.7",
                      "--lambda-nm", "1276", "--loss-ppm", str(SHORT_CAVITY_LOSS_PPM))
    assert report["total_loss_ppm"] == SHORT_CAVITY_LOSS_PPM
    assert report["finesse"] == pytest.approx(3.49e5, rel=1e-2)
    assert report["loss"]["transmission_a_ppm"] == settings.transmission_ppm


def test_design_zero_length_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "0", "--lambda-nm", "1276"])
    assert exit_info.value.code == 2
    assert "must be positive" in capsys.readouterr().err


def test_design_unstable_names_g_product(capsys):
    code = main(["design", "--topology", "pc", "--roc-um", "10", "--length-um", "12", "--lambda-nm", "1276"])
    assert code == 1
    assert "g1*g2" in capsys.readouterr().err


def test_design_text_table_and_sketch(capsys, tmp_path):
    code = main(["design", "--topology", "pc", "--roc-um", "69.3", "--spacing-um", "6.66", "--lambda-nm", "1276",
                 "--svg", "--out-dir", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "waist_um" in out
    assert (tmp_path / "design.json").is_file()
    assert (tmp_path / "design.svg").read_text().startswith("<?xml")


def test_config_file_sets_coating(capsys, tmp_path):
    config = tmp_path / "lab.env"
    config.write_text("TRANSMISSION_PPM=50\nPENETRATION_LAMBDA=0\n")
    report = run_json(capsys, "design", "--topology", "pc", "--roc-um", "69.3", "--spacing-um", "8.7",
                      "--lambda-nm", "1276", "--config", str(config))
    assert report["loss"]["transmission_a_ppm"] == 50.0
    assert report["length_um"] == pytest.approx(8.7)


def test_config_file_beats_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("TRANSMISSION_PPM", "7")
    monkeypatch.setenv("EXCESS_LOSS_PPM", "2")
    config = tmp_path / "lab.env"
    config.write_text("transmission_ppm=50\nLOG_LEVEL=DEBUG\n")
    report = run_json(capsys, "design", "--topology", "pc", "--roc-um", "69.3", "--length-um", "8.7",
                      "--lambda-nm", "1276", "--config", str(config), "--log-level", "WARNING")
    assert report["loss"]["transmission_a_ppm"] == 50.0
    assert report["loss"]["coating_excess_ppm"] == pytest.approx(4.0)
    assert settings.log_level == "WARNING"


def test_load_settings_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("TRANSMISSION_PPM", "7")
    monkeypatch.setenv("ROUGHNESS_NM", "0.3")
    config = tmp_path / "lab.env"
    config.write_text("TRANSMISSION_PPM=50\nMIN_CONTRAST=0.2\nNOT_A_SETTING=1\n")

    assert load_settings().transmission_ppm == 7.0
    loaded = load_settings(config)
    assert loaded.transmission_ppm == 50.0
    assert loaded.min_contrast == 0.2
    assert loaded.roughness_nm == 0.3
    assert load_settings(config, transmission_ppm=3.0, min_contrast=None).transmission_ppm == 3.0


def test_missing_config_file(capsys, tmp_path):
    code = main(["table1", "--config", str(tmp_path / "nope.env")])
    assert code == 2


def test_table1_csv(capsys):
    assert main(["table1", "--format", "csv"]) == 0
    out = capsys.readouterr().out
    rows = out.strip().splitlines()
    assert rows[0].startswith("name,")
    assert len(rows) == 5


def test_table1_text_prints_note(capsys):
    assert main(["table1"]) == 0
    assert "does not follow from those columns" in capsys.readouterr().out


def test_spectrum_with_sidebands(capsys, sideband_csv):
    report = run_json(capsys, "spectrum", str(sideband_csv), "--x-unit", "sample_index", "--sideband-mhz", "200",
                      "--fsr-thz", "20.3", "--lambda-nm", "1276")
    assert report["fit"]["fwhm_mhz"] == pytest.approx(MEASURED_LINEWIDTH_MHZ, abs=2.0)
    assert report["finesse"] == pytest.approx(SHORT_CAVITY_FINESSE, abs=0.12e5)
    assert report["fsr_source"] == "given"
    assert report["loss_ppm"] == pytest.approx(SHORT_CAVITY_LOSS_PPM, rel=0.05)
    assert report["quality"] == pytest.approx(4.05e6, rel=0.05)
    assert report["warnings"] == []


def test_spectrum_without_calibration_warns(capsys, plain_csv):
    report = run_json(capsys, "spectrum", str(plain_csv), "--x-unit", "sample_index")
    assert report["fit"]["fwhm_mhz"] is None
    assert report["fit"]["fwhm"] == pytest.approx(58.0, rel=1e-4)
    assert any("raw axis units" in message for message in report["warnings"])


def test_spectrum_ladder_from_wavelength_scan(capsys, tmp_path, ladder_scan):
    from app.storage import files

    path = files.write_spectrum_csv(ladder_scan, tmp_path / "ladder.csv")
    report = run_json(capsys, "spectrum", str(path), "--x-unit", "wavelength_nm", "--roc-um", "105.6")
    assert report["ladder"]["length_um"] == pytest.approx(18.9, rel=1e-3)
    assert report["fsr_source"] == "ladder"
    assert report["finesse"] == pytest.approx(7.931e6 / 5000.0, rel=1e-3)


def test_spectrum_batch_keeps_input_order(capsys, sideband_csv, plain_csv):
    reports = run_json(capsys, "spectrum", str(plain_csv), str(sideband_csv), "--x-unit", "sample_index")
    assert [report["source"] for report in reports] == [plain_csv.name, sideband_csv.name]


def test_spectrum_empty_csv(capsys, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["spectrum", str(empty)]) == 2
    assert "empty" in capsys.readouterr().err


def test_spectrum_missing_file(capsys, tmp_path):
    assert main(["spectrum", str(tmp_path / "absent.csv")]) == 2
    assert "not found" in capsys.readouterr().err


def test_spectrum_calibration_failure_exits_one(capsys, plain_csv):
    assert main(["spectrum", str(plain_csv), "--x-unit", "sample_index", "--sideband-mhz", "200"]) == 1
    assert "sidebands not found" in capsys.readouterr().err


def test_profile_recovers_roc(capsys, surface_csv, tmp_path):
    report = run_json(capsys, "profile", str(surface_csv), "--out-dir", str(tmp_path / "out"))
    assert report["roc_um"] == pytest.approx(105.6, rel=1e-2)
    assert (tmp_path / "out" / "profile.svg").is_file()


def test_profile_quartic_off_has_larger_residual(capsys, surface_csv):
    with_quartic = run_json(capsys, "profile", str(surface_csv))
    without = run_json(capsys, "profile", str(surface_csv), "--quartic", "off")
    assert without["rms_residual_nm"] > with_quartic["rms_residual_nm"]
    assert without["quartic"] == 0.0


def test_profile_missing_column(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x_um,y_um\n0,0\n1,0\n")
    assert main(["profile", str(path)]) == 2
    assert "z_um" in capsys.readouterr().err


def test_sweep_csv_and_artifacts(capsys, tmp_path):
    assert main(["sweep", "--format", "csv", "--out-dir", str(tmp_path)]) == 0
    frame = pd.read_csv(tmp_path / "sweep.csv")
    assert list(frame.columns)[:2] == ["length_um", "finesse"]
    assert len(frame) == 61
    assert (frame["finesse"].diff().dropna() <= 0).all()
    assert (tmp_path / "sweep.svg").read_text().startswith("<?xml")
    assert capsys.readouterr().out.startswith("length_um,finesse")


def test_sweep_is_byte_deterministic(capsys, tmp_path):
    for name in ("first", "second"):
        assert main(["sweep", "--calibration", "PC-a2", "--out-dir", str(tmp_path / name)]) == 0
    for artifact in ("sweep.json", "sweep.csv", "sweep.svg"):
        assert (tmp_path / "first" / artifact).read_bytes() == (tmp_path / "second" / artifact).read_bytes()


def test_sweep_truncation_warning(capsys):
    assert main(["sweep", "--length-range", "10", "45", "--points", "36"]) == 0
    assert "no resonance observed" in capsys.readouterr().out


def test_sweep_unknown_calibration(capsys):
    assert main(["sweep", "--calibration", "XX"]) == 1
    assert "unknown calibration" in capsys.readouterr().err


def test_sweep_reversed_range(capsys):
    assert main(["sweep", "--length-range", "40", "10"]) == 2

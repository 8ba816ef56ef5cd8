import io
import json

import numpy as np
import pytest

from app.core.errors import InputFormatError
from app.models.models import AxisKind
from app.storage import files


def test_spectrum_csv_round_trip(tmp_path, sideband_scan):
    path = files.write_spectrum_csv(sideband_scan, tmp_path / "scan.csv")
    loaded = files.read_spectrum_csv(path, AxisKind.SAMPLE_INDEX)
    assert loaded.n_points == sideband_scan.n_points
    np.testing.assert_allclose(loaded.signal, sideband_scan.signal, rtol=1e-11)


def test_header_whitespace_is_tolerated():
    rows = "x, signal\n" + "".join(f"{index}, 1.0\n" for index in range(20))
    spectrum = files.read_spectrum_csv(io.StringIO(rows), AxisKind.SAMPLE_INDEX)
    assert spectrum.n_points == 20


@pytest.mark.parametrize("text, message", [
    ("", "empty"),
    ("x,signal\n", "header only"),
    ("x,level\n0,1\n", "missing column(s) signal"),
    ("x,signal\n0,a\n1,b\n", "non-numeric"),
])
def test_bad_spectrum_files(text, message):
    with pytest.raises(InputFormatError, match=message.replace("(", r"\(").replace(")", r"\)")):
        files.read_spectrum_csv(io.StringIO(text), AxisKind.FREQUENCY_GHZ)


def test_too_short_scan_is_format_error():
    rows = "x,signal\n" + "".join(f"{index},1\n" for index in range(5))
    with pytest.raises(InputFormatError, match="at least 16 points"):
        files.read_spectrum_csv(io.StringIO(rows), AxisKind.SAMPLE_INDEX)


def test_surface_csv_round_trip(tmp_path, actuated_surface):
    path = files.write_surface_csv(actuated_surface, tmp_path / "surface.csv")
    loaded = files.read_surface_csv(path)
    assert loaded.n_points == actuated_surface.n_points
    assert loaded.lateral_pitch_um == pytest.approx(0.5)


def test_report_json_list():
    from app.services.workflows import run_table1

    report = run_table1()
    decoded = json.loads(files.report_to_json(report.rows))
    assert [row["name"] for row in decoded] == ["PC-f", "PC-f2", "PC-a", "CC-a"]


def test_rows_to_csv_uses_lf():
    text = files.rows_to_csv([{"a": 1.0, "b": 2.0}, {"a": 3.0, "b": 4.0}])
    assert text == "a,b\n1,2\n3,4\n"

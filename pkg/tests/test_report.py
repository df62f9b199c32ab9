import csv
import io
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilmgap import report
from nilmgap.errors import UnpairedScenario
from nilmgap.experiment import ScenarioResult
from nilmgap.metrics import Score, gap

SVG = "{http://www.w3.org/2000/svg}"


def pair(alg, app, real, den, hh="h"):
    return [
        ScenarioResult(hh, alg, app, "REAL", Score(*real, 100), 0.3),
        ScenarioResult(hh, alg, app, "DENOISED", Score(*den, 100), 0.3),
    ]


def bars(svg):
    return [e for e in ET.fromstring(svg).iter(SVG + "rect") if "bar" in e.get("class", "").split()]


def test_single_pair_single_row():
    text = report.score_table_text(pair("CO", "kettle", (79.1, 1.33), (9.2, 0.43)), "mae")
    body = text.splitlines()[4:]
    assert len(body) == 1
    assert body[0].split() == ["kettle", "|", "79.1", "9.2"]


def test_nde_rounding():
    text = report.score_table_text(pair("LSTM", "kettle", (1.0, 0.478), (1.0, 0.2)), "nde")
    assert text.splitlines()[-1].split()[-2:] == ["0.48", "0.20"]


def test_empty_results_rejected():
    with pytest.raises(ValueError):
        report.score_table_text([], "mae")


def test_table_numbers_match_csv():
    res = pair("CO", "fridge", (41.83, 1.804), (49.77, 2.066)) + pair("S2P", "fridge", (12.349, 0.455), (3.05, 0.125))
    text, table_csv = report.emit_score_table(res)
    rows = list(csv.DictReader(io.StringIO(table_csv)))
    assert len(rows) == 4
    for r in rows:
        for col in ("real", "denoised"):
            assert report.fmt(float(r[col]), r["metric"]) in text


def test_ten_bars_for_two_algorithms_five_appliances():
    res = []
    for i, app in enumerate(["a", "b", "c", "d", "e"]):
        res += pair("CO", app, (10.0 + i, 0.5), (5.0, 0.2)) + pair("S2P", app, (8.0, 0.4), (6.0 - i, 0.3))
    chart_csv, svg = report.emit_gap_chart(res, "mae")
    assert len(bars(svg)) == 10
    assert len(chart_csv.splitlines()) == 11
    apps = [b.get("data-appliance") for b in bars(svg)]
    assert apps == sorted(apps)


def test_negative_gap_below_axis():
    res = pair("CO", "fridge", (41.8, 1.8), (49.8, 2.07)) + pair("CO", "kettle", (79.1, 1.3), (9.2, 0.4))
    _, svg = report.emit_gap_chart(res, "mae")
    axis = next(e for e in ET.fromstring(svg).iter(SVG + "line") if e.get("class") == "axis")
    y_axis = float(axis.get("y1"))
    by_app = {b.get("data-appliance"): b for b in bars(svg)}
    neg, pos = by_app["fridge"], by_app["kettle"]
    assert "negative" in neg.get("class").split()
    assert float(neg.get("y")) == pytest.approx(y_axis, abs=0.01)
    assert float(neg.get("height")) > 0
    assert float(pos.get("y")) + float(pos.get("height")) == pytest.approx(y_axis, abs=0.01)


@settings(max_examples=50)
@given(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 10), st.floats(0, 10))
def test_gap_csv_bitwise_pass_through(rm, dm, rn, dn):
    res = pair("LSTM", "fridge", (rm, rn), (dm, dn))
    g = gap(Score(rm, rn, 100), Score(dm, dn, 100))
    for metric, want in (("mae", g.delta_mae), ("nde", g.delta_nde)):
        chart_csv, svg = report.emit_gap_chart(res, metric)
        row = next(csv.DictReader(io.StringIO(chart_csv)))
        assert float(row["delta"]) == want
        assert float(bars(svg)[0].get("data-delta")) == want


def test_unpaired_raises():
    res = pair("CO", "fridge", (1.0, 0.1), (1.0, 0.1))[:1]
    with pytest.raises(UnpairedScenario):
        report.emit_gap_chart(res)


def test_unknown_metric():
    with pytest.raises(ValueError):
        report.emit_gap_chart(pair("CO", "a", (1.0, 0.1), (1.0, 0.1)), "rmse")


def test_regeneration_byte_identical(tmp_path):
    res = pair("CO", "fridge", (41.8, 1.8), (49.8, 2.07)) + pair("LSTM", "fridge", (20.0, 0.9), (9.0, 0.3))
    a = report.write_report(res, tmp_path / "a", "nde")
    b = report.write_report(res, tmp_path / "b", "nde")
    assert [p.name for p in a] == ["score_table.txt", "score_table.csv", "gap_nde.csv", "gap_nde.svg"]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))


def test_multiple_households_prefix_labels():
    res = pair("CO", "fridge", (3.0, 0.1), (1.0, 0.1), hh="h1") + pair("CO", "fridge", (2.0, 0.1), (1.0, 0.1), hh="h2")
    rows = report.gap_rows(res, "mae")
    assert [r[0] for r in rows] == ["h1/fridge", "h2/fridge"]
    assert "[h1]" in report.score_table_text(res, "mae")

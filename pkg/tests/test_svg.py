import math
import xml.etree.ElementTree as ET

from boltgan.svg import line_chart, write_line_chart

NS = "{http://www.w3.org/2000/svg}"


def test_chart_is_well_formed():
    root = ET.fromstring(line_chart([0, 1, 2], {"a": [1.0, 0.5, 0.2], "b <&>": [0.0, 1.0, 2.0]}, title="t"))
    assert root.tag == NS + "svg"
    assert len(root.findall(f".//{NS}polyline")) >= 2
    assert any("b <&>" in (t.text or "") for t in root.iter(NS + "text"))


def test_non_finite_values_break_the_line():
    root = ET.fromstring(line_chart([0, 1, 2, 3, 4], {"a": [1.0, 2.0, math.nan, 3.0, 4.0]}))
    assert len(root.findall(f".//{NS}polyline")) == 2


def test_degenerate_inputs(tmp_path):
    ET.fromstring(line_chart([0], {"a": [1.0]}))
    ET.fromstring(line_chart([0, 1], {"a": [math.nan, math.nan]}))
    path = tmp_path / "c.svg"
    write_line_chart(path, [0, 1], {"a": [0.0, 1.0]})
    text = path.read_text()
    ET.fromstring(text)
    assert "href" not in text

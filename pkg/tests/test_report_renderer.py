"""Unit tests for report_renderer.py module."""

import json

import numpy as np
import pytest

from src.report_renderer import ReportRenderer


@pytest.fixture
def renderer(tmp_path):
    return ReportRenderer(tmp_path / "out", "Test Run", "1.0.0", {"seed": 42})


class TestReportRendererSlugify:
    """Test suite for _slugify."""

    def test_lowercase_and_spaces(self, renderer):
        """Test that slugs are lowercase with underscores."""
        assert renderer._slugify("Decay Study") == "decay_study"

    def test_slashes_to_dashes(self, renderer):
        """Test that slashes become dashes."""
        assert renderer._slugify("equal/s=0") == "equal-s=0"


class TestReportRendererCsv:
    """Test suite for write_csv."""

    def test_header_and_crlf(self, renderer):
        """Test the header line and CRLF line endings."""
        path = renderer.write_csv("series", ["t", "norm"], [[1.0, 0.5], [2.0, 0.25]])
        raw = path.read_bytes()
        assert raw.startswith(b"t,norm\r\n")
        assert raw.count(b"\r\n") == 3

    def test_full_precision(self, renderer):
        """Test that values keep 17 significant digits."""
        path = renderer.write_csv("precise", ["x"], [[1.0 / 3.0]])
        value = path.read_text().splitlines()[1]
        assert float(value) == 1.0 / 3.0

    def test_creates_output_dir(self, renderer):
        """Test that the output directory is created on demand."""
        assert not renderer.output_dir.exists()
        renderer.write_csv("series", ["t"], [[1.0]])
        assert renderer.output_dir.is_dir()

    def test_deterministic(self, renderer):
        """Test that identical rows give byte-identical files."""
        rows = np.random.default_rng(1).standard_normal((10, 3))
        first = renderer.write_csv("a", ["x", "y", "z"], rows).read_bytes()
        second = renderer.write_csv("b", ["x", "y", "z"], rows).read_bytes()
        assert first == second


class TestReportRendererJson:
    """Test suite for write_json and write_schema."""

    def test_embeds_version_and_config(self, renderer):
        """Test that every report carries the version and resolved config."""
        path = renderer.write_json("fit", {"slope": -0.5})
        document = json.loads(path.read_text())
        assert document["version"] == "1.0.0"
        assert document["config"] == {"seed": 42}
        assert document["report"] == "fit"
        assert document["slope"] == -0.5

    def test_numpy_and_complex_values(self, renderer):
        """Test serialization of numpy scalars, arrays and complex numbers."""
        path = renderer.write_json("values", {"a": np.float64(1.5), "b": np.arange(3), "c": 1 + 2j})
        document = json.loads(path.read_text())
        assert document["a"] == 1.5
        assert document["b"] == [0, 1, 2]
        assert document["c"] == {"re": 1.0, "im": 2.0}

    def test_unserializable_value(self, renderer):
        """Test that unknown objects raise TypeError."""
        with pytest.raises(TypeError):
            renderer.write_json("bad", {"x": object()})

    def test_sorted_keys(self, renderer):
        """Test that key order does not depend on insertion order."""
        first = renderer.write_json("one", {"b": 1, "a": 2}).read_text()
        second = renderer.write_json("one", {"a": 2, "b": 1}).read_text()
        assert first == second

    def test_schema_file(self, renderer):
        """Test that the schema is written as config.schema.json."""
        path = renderer.write_schema({"type": "object"})
        assert path.name == "config.schema.json"
        assert json.loads(path.read_text()) == {"type": "object"}


class TestReportRendererSvg:
    """Test suite for write_svg."""

    def test_writes_svg(self, renderer):
        """Test that a log-log plot is written."""
        t = np.geomspace(1.0, 100.0, 10)
        path = renderer.write_svg("decay", {"norm": (t, 1.0 / t)}, "t", "norm")
        assert path.suffix == ".svg"
        assert "<svg" in path.read_text()

    def test_skips_non_positive_points(self, renderer):
        """Test that zeros do not break the log axes."""
        path = renderer.write_svg("zeros", {"norm": ([0.0, 1.0, 2.0], [1.0, 0.0, 0.5])}, "t", "norm")
        assert path.exists()


class TestReportRendererIndex:
    """Test suite for render_index."""

    def test_cards_and_verdicts(self, renderer):
        """Test one card per recorded study with its verdict badge."""
        csv = renderer.write_csv("series", ["t"], [[1.0]])
        renderer.record("decay-study", "H^0 decay", "pass", [csv])
        renderer.record("gevrey-check", "Smoothing", "fail", [])
        renderer.record("simulate", "Evolution", None, [])
        content = renderer.render_index().read_text()
        assert "decay-study" in content
        assert "verdict-pass" in content
        assert "verdict-fail" in content
        assert "verdict-info" in content
        assert 'href="series.csv"' in content
        assert "elastic-lab 1.0.0" in content

    def test_escapes_html(self, renderer):
        """Test that descriptions are HTML-escaped."""
        renderer.record("study", "<b>bold</b>", "pass", [])
        content = renderer.render_index().read_text()
        assert "&lt;b&gt;bold&lt;/b&gt;" in content

    def test_empty_index(self, renderer):
        """Test the placeholder when nothing was recorded."""
        content = renderer.render_index().read_text()
        assert "No reports were written." in content

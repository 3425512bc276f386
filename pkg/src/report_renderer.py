"""Report writer for the elastic wave laboratory.

Writes the artifacts of a run into one output directory:
- <name>.csv: numeric series, 17 significant digits, CRLF line endings
- <name>.json: fit reports embedding the resolved config and the code version
- <name>.svg: optional log-log plots of the same series
- config.schema.json: schema of the configuration the reports embed
- index.html: one card per study with its verdict
"""

import html
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

# fixed SVG element ids across runs
matplotlib.rcParams["svg.hashsalt"] = "elastic-lab"

INDEX_CSS = """\
        * { margin: 0; padding: 0; box-sizing: border-box; }
        body { font-family: system-ui, sans-serif; line-height: 1.5; color: #2b2b2b; background: #f3f5f7; padding: 24px; }
        .container { max-width: 1100px; margin: 0 auto; }
        header { margin-bottom: 24px; padding-bottom: 12px; border-bottom: 2px solid #2f6f8f; }
        h1, .report-card h3 { color: #2f6f8f; }
        .report-card { background: #fff; border-radius: 6px; padding: 16px 20px; margin: 12px 0; box-shadow: 0 1px 4px rgba(0, 0, 0, 0.12); }
        .report-description { margin: 4px 0 8px; }
        .verdict { display: inline-block; padding: 1px 10px; border-radius: 3px; font-weight: 600; font-size: 0.8em; color: #fff; background: #7a7a7a; }
        .verdict-pass { background: #2e8b57; }
        .verdict-fail { background: #c0392b; }
        .report-files { margin-top: 8px; }
        .report-link { margin-right: 12px; color: #2f6f8f; font-family: monospace; text-decoration: none; }
        footer { margin-top: 28px; text-align: center; color: #8a8a8a; font-size: 0.85em; }
"""


@dataclass
class ReportEntry:
    """One study in the index page."""

    name: str
    description: str
    verdict: Optional[str] = None
    files: List[str] = field(default_factory=list)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class ReportRenderer:
    """Writes CSV, JSON, SVG and HTML artifacts for a run."""

    def __init__(self, output_dir: Path, title: str, version: str, config: Mapping[str, Any]):
        """Initialize the renderer.

        Args:
            output_dir: Directory receiving every artifact
            title: Title of the index page
            version: Semantic version embedded in JSON reports
            config: Resolved configuration embedded in JSON reports
        """
        self.output_dir = Path(output_dir)
        self.title = title
        self.version = version
        self.config = dict(config)
        self.entries: List[ReportEntry] = []

    def _slugify(self, text: str) -> str:
        """Convert text to a filesystem-safe slug."""
        return text.lower().replace(" ", "_").replace("/", "-")

    def _path(self, name: str, suffix: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / f"{self._slugify(name)}.{suffix}"

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[float]]) -> Path:
        """Write numeric rows under a header line."""
        path = self._path(name, "csv")
        data = np.asarray(rows, dtype=float).reshape(-1, len(header))
        np.savetxt(
            path, data, fmt="%.17g", delimiter=",",
            header=",".join(header), comments="", newline="\r\n",
        )
        logger.info(f"CSV saved to: {path}")
        return path

    def write_json(self, name: str, payload: Mapping[str, Any]) -> Path:
        """Write a report with the version and resolved config attached."""
        path = self._path(name, "json")
        document = {"report": name, "version": self.version, "config": self.config}
        document.update(payload)
        path.write_text(
            json.dumps(document, indent=2, sort_keys=True, default=_jsonable) + "\n",
            encoding="utf-8",
        )
        logger.info(f"JSON saved to: {path}")
        return path

    def write_schema(self, schema: Mapping[str, Any]) -> Path:
        path = self._path("config.schema", "json")
        path.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def write_svg(
        self,
        name: str,
        series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
        xlabel: str,
        ylabel: str,
    ) -> Path:
        """Log-log plot of one or more (x, y) series."""
        path = self._path(name, "svg")
        figure, axes = plt.subplots(figsize=(6.4, 4.8))
        try:
            for label, (x, y) in series.items():
                x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
                keep = (x > 0) & (y > 0)
                axes.loglog(x[keep], y[keep], marker="o", markersize=3, label=label)
            axes.set_xlabel(xlabel)
            axes.set_ylabel(ylabel)
            axes.set_title(name)
            axes.grid(True, which="both", alpha=0.3)
            axes.legend()
            figure.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(figure)
        logger.info(f"SVG saved to: {path}")
        return path

    def record(self, name: str, description: str, verdict: Optional[str], files: Sequence[Path]) -> None:
        """Add a study card to the index."""
        self.entries.append(
            ReportEntry(name=name, description=description, verdict=verdict, files=[Path(f).name for f in files])
        )

    def render_index(self) -> Path:
        """Generate index.html with one card per recorded study.

        Returns:
            Path to generated index.html
        """
        logger.info("Rendering index.html")
        self.output_dir.mkdir(parents=True, exist_ok=True)
        generated_at = datetime.now().strftime("%Y-%m-%d %H:%M:%S")

        cards = []
        for entry in self.entries:
            verdict = entry.verdict or "info"
            links = "\n".join(
                f'                <a href="{html.escape(name)}" class="report-link">{html.escape(name)}</a>'
                for name in entry.files
            )
            cards.append(
                f'        <div class="report-card">\n'
                f'            <h3>{html.escape(entry.name)}</h3>\n'
                f'            <p class="report-description">{html.escape(entry.description)}</p>\n'
                f'            <div class="report-meta">\n'
                f'                <span class="verdict verdict-{verdict}">{verdict.upper()}</span>\n'
                f'            </div>\n'
                f'            <div class="report-files">\n'
                f'{links}\n'
                f'            </div>\n'
                f'        </div>'
            )
        cards_html = "\n".join(cards) if cards else '        <div class="no-reports">No reports were written.</div>'

        html_content = (
            f"<!DOCTYPE html>\n"
            f"<html lang=\"en\">\n"
            f"<head>\n"
            f"    <meta charset=\"UTF-8\">\n"
            f"    <meta name=\"viewport\" content=\"width=device-width, initial-scale=1.0\">\n"
            f"    <title>{html.escape(self.title)}</title>\n"
            f"    <style>\n{INDEX_CSS}    </style>\n"
            f"</head>\n"
            f"<body>\n"
            f"    <div class=\"container\">\n"
            f"        <header>\n"
            f"            <h1>{html.escape(self.title)}</h1>\n"
            f"        </header>\n"
            f"\n"
            f"{cards_html}\n"
            f"\n"
            f"        <footer>\n"
            f"            <p>Generated by elastic-lab {self.version} on {generated_at}</p>\n"
            f"        </footer>\n"
            f"    </div>\n"
            f"</body>\n"
            f"</html>\n"
        )

        output_file = self.output_dir / "index.html"
        output_file.write_text(html_content, encoding="utf-8")
        logger.info(f"Index saved to: {output_file}")
        return output_file

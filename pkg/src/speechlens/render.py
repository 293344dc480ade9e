"""Rendering of attribution reports: JSON, HTML, SVG, terminal text.

The renderer is read-only. It formats the numbers a report already holds
and never recomputes or rounds them before display logic; JSON output in
particular reproduces every float exactly (shortest round-trip repr).

Colors use a diverging scale anchored at zero: blues for negative values,
reds for positive, neutral gray at zero, normalized by the largest
absolute value in the table at hand.
"""

import html
import json

from .attribution import AttributionReport, report_to_jsonable
from .errors import ValidationError

__all__ = ["FORMATS", "render_attribution", "dump_json", "load_json"]

FORMATS = ("json", "html", "svg", "ansi")

_NEG = (33, 102, 172)
_MID = (247, 247, 247)
_POS = (178, 24, 43)


def dump_json(obj) -> str:
    """Canonical JSON text: 2-space indent, insertion order, trailing newline."""
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def load_json(text: str):
    return json.loads(text)


def _blend(a, b, t):
    return tuple(int(round(a[i] + (b[i] - a[i]) * t)) for i in range(3))


def _color(value: float, vmax: float):
    if vmax <= 0:
        return _MID
    t = max(-1.0, min(1.0, value / vmax))
    if t >= 0:
        return _blend(_MID, _POS, t)
    return _blend(_MID, _NEG, -t)


def _hex(rgb) -> str:
    return "#{:02X}{:02X}{:02X}".format(*rgb)


def _text_color(rgb) -> str:
    # readable text on dark cells
    luminance = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
    return "#FFFFFF" if luminance < 140 else "#1A1A1A"


def _fmt(value: float) -> str:
    return f"{value:+.3f}"


def _vmax(values) -> float:
    return max((abs(v) for v in values), default=0.0)


def render_attribution(report: AttributionReport, fmt: str = "json") -> str:
    if fmt == "json":
        return dump_json(report_to_jsonable(report))
    if fmt == "html":
        return _render_html(report)
    if fmt == "svg":
        return _render_svg(report)
    if fmt == "ansi":
        return _render_ansi(report)
    raise ValidationError(f"unknown format {fmt!r}; choose one of {FORMATS}")


def _render_html(report: AttributionReport) -> str:
    parts = [
        "<!doctype html>",
        "<html><head><meta charset='utf-8'>",
        f"<title>{html.escape(report.utterance_id)}</title>",
        "<style>",
        "body{font-family:sans-serif;margin:1.5em}",
        "table{border-collapse:collapse;margin:0.6em 0 1.2em}",
        "td,th{border:1px solid #bbb;padding:4px 9px;text-align:center;"
        "font-size:13px;white-space:nowrap}",
        "th{background:#eee}",
        "caption{text-align:left;font-weight:bold;padding:4px 0}",
        "</style></head><body>",
        f"<h2>{html.escape(report.utterance_id)}</h2>",
    ]
    for te in report.targets:
        title = f"{te.target.head} = {te.target.class_name} (p = {te.base_prob:.3f})"
        word_scores = [r for _, r in te.words.scores]
        vmax = _vmax(word_scores)
        parts.append("<table>")
        parts.append(f"<caption>{html.escape(title)}</caption>")
        header = "".join(
            f"<th>{html.escape(seg.text)}</th>" for seg, _ in te.words.scores
        )
        parts.append(f"<tr><th>word</th>{header}</tr>")
        cells = []
        for _, r in te.words.scores:
            rgb = _color(r, vmax)
            cells.append(
                f"<td style='background:{_hex(rgb)};color:{_text_color(rgb)}'>{_fmt(r)}</td>"
            )
        parts.append(f"<tr><th>r</th>{''.join(cells)}</tr>")
        parts.append("</table>")

        deltas = [d for dd in te.paralinguistic.directions for _, d in dd.grid]
        vmax = _vmax(deltas)
        parts.append("<table>")
        parts.append(f"<caption>{html.escape(title)}, perturbation sweeps</caption>")
        parts.append("<tr><th>direction</th><th>r</th><th>sweep</th></tr>")
        for dd in te.paralinguistic.directions:
            sweep = []
            for param, delta in dd.grid:
                rgb = _color(delta, vmax)
                sweep.append(
                    f"<td style='background:{_hex(rgb)};color:{_text_color(rgb)}'"
                    f" title='{param:g}'>{_fmt(delta)}</td>"
                )
            parts.append(
                f"<tr><th>{html.escape(dd.label)}</th><td>{_fmt(dd.relevance)}</td>"
                f"{''.join(sweep)}</tr>"
            )
        parts.append("</table>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


_CELL_W, _CELL_H, _LABEL_W = 64, 24, 120


def _svg_cell(x, y, value, vmax, label=None):
    rgb = _color(value, vmax)
    out = [
        f"<rect x='{x}' y='{y}' width='{_CELL_W}' height='{_CELL_H}' "
        f"fill='{_hex(rgb)}' stroke='#999'/>",
        f"<text x='{x + _CELL_W / 2}' y='{y + _CELL_H - 7}' text-anchor='middle' "
        f"font-size='11' fill='{_text_color(rgb)}'>{_fmt(value)}</text>",
    ]
    if label is not None:
        out.append(
            f"<text x='{x + _CELL_W / 2}' y='{y - 4}' text-anchor='middle' "
            f"font-size='10' fill='#333'>{html.escape(str(label))}</text>"
        )
    return out

def _render_svg(report: AttributionReport) -> str:
    rows = []
    y = 10
    width = _LABEL_W + 20
    for te in report.targets:
        rows.append(
            f"<text x='10' y='{y + 14}' font-size='13' font-weight='bold' fill='#111'>"
            f"{html.escape(report.utterance_id)}: {html.escape(te.target.head)} = "
            f"{html.escape(te.target.class_name)} (p = {te.base_prob:.3f})</text>"
        )
        y += 36
        word_scores = [r for _, r in te.words.scores]
        vmax = _vmax(word_scores)
        rows.append(f"<text x='10' y='{y + 16}' font-size='11' fill='#333'>words</text>")
        for i, (seg, r) in enumerate(te.words.scores):
            x = _LABEL_W + i * (_CELL_W + 2)
            rows.extend(_svg_cell(x, y, r, vmax, seg.text))
            width = max(width, x + _CELL_W + 20)
        y += _CELL_H + 22
        deltas = [d for dd in te.paralinguistic.directions for _, d in dd.grid]
        vmax = _vmax(deltas)
        for dd in te.paralinguistic.directions:
            rows.append(
                f"<text x='10' y='{y + 16}' font-size='11' fill='#333'>"
                f"{html.escape(dd.label)}</text>"
            )
            for i, (param, delta) in enumerate(dd.grid):
                x = _LABEL_W + i * (_CELL_W + 2)
                rows.extend(_svg_cell(x, y, delta, vmax, f"{param:g}"))
                width = max(width, x + _CELL_W + 20)
            y += _CELL_H + 22
        y += 16
    body = "\n".join(rows)
    return (
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' height='{y}' "
        f"viewBox='0 0 {width} {y}'>\n<rect width='100%' height='100%' fill='white'/>\n"
        f"{body}\n</svg>\n"
    )


def _ansi_cell(value: float, vmax: float) -> str:
    rgb = _color(value, vmax)
    fg = "38;2;255;255;255" if _text_color(rgb) == "#FFFFFF" else "38;2;26;26;26"
    return f"\x1b[48;2;{rgb[0]};{rgb[1]};{rgb[2]}m\x1b[{fg}m {_fmt(value)} \x1b[0m"


def _render_ansi(report: AttributionReport) -> str:
    lines = []
    for te in report.targets:
        lines.append(
            f"{report.utterance_id}  {te.target.head} = {te.target.class_name}"
            f"  (p = {te.base_prob:.3f})"
        )
        word_scores = [r for _, r in te.words.scores]
        vmax = _vmax(word_scores)
        words = "  ".join(f"{seg.text:^10.10}" for seg, _ in te.words.scores)
        cells = "  ".join(f"{_ansi_cell(r, vmax):^10}" for _, r in te.words.scores)
        lines.append("  " + words)
        lines.append("  " + cells)
        deltas = [d for dd in te.paralinguistic.directions for _, d in dd.grid]
        vmax = _vmax(deltas)
        for dd in te.paralinguistic.directions:
            sweep = " ".join(_ansi_cell(d, vmax) for _, d in dd.grid)
            lines.append(f"  {dd.label:<13} r={_fmt(dd.relevance)}  {sweep}")
        lines.append("")
    return "\n".join(lines) + "\n"

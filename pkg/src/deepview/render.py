"""Static SVG rendering of a payload: decision surface behind the scatter.

Grid cells are class-colored rectangles whose opacity encodes certainty;
points are dots colored by their true label (predicted label when no true
label exists); points whose prediction disagrees with the background get
a surrounding ring in the predicted class color.  The 10-color palette is
fixed so renders are comparable across runs, and all numbers are
formatted deterministically so equal payloads yield byte-identical SVG.
"""

from __future__ import annotations

from .errors import ValidationError

# fixed 10-color cycle (colorblind-tolerant standard palette)
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

PLOT_SIZE = 720.0
LEGEND_WIDTH = 160.0
POINT_RADIUS = 4.0
RING_RADIUS = 8.0


def class_color(index: int) -> str:
    return PALETTE[index % len(PALETTE)]


def _fmt(value: float) -> str:
    return format(float(value), ".6g")


def render_svg(payload: dict) -> str:
    """Render a payload dict (parsed VisPayload JSON) to an SVG string."""
    try:
        grid = payload["grid"]
        points = payload["points"]
        class_names = payload["class_names"]
        width = int(grid["width"])
        height = int(grid["height"])
        labels = grid["labels"]
        certainty = grid["certainty"]
        x0, y0, dx, dy = (float(grid[k]) for k in ("x0", "y0", "dx", "dy"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed payload: {exc}") from exc
    if len(labels) != width * height or len(certainty) != width * height:
        raise ValidationError("malformed payload: grid arrays do not match resolution")

    extent_x = width * dx
    extent_y = height * dy
    sx = PLOT_SIZE / extent_x
    sy = PLOT_SIZE / extent_y

    def px(x: float) -> float:
        return (x - x0) * sx

    def py(y: float) -> float:
        # world y grows upward, SVG y downward
        return PLOT_SIZE - (y - y0) * sy

    total_w = PLOT_SIZE + LEGEND_WIDTH
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(total_w)}" '
        f'height="{_fmt(PLOT_SIZE)}" viewBox="0 0 {_fmt(total_w)} {_fmt(PLOT_SIZE)}">'
    ]

    parts.append('<g class="cells">')
    cell_w = _fmt(dx * sx)
    cell_h = _fmt(dy * sy)
    for iy in range(height):
        top = py(y0 + (iy + 1) * dy)
        for ix in range(width):
            idx = iy * width + ix
            parts.append(
                f'<rect x="{_fmt(px(x0 + ix * dx))}" y="{_fmt(top)}" '
                f'width="{cell_w}" height="{cell_h}" '
                f'fill="{class_color(int(labels[idx]))}" '
                f'fill-opacity="{_fmt(float(certainty[idx]))}"/>'
            )
    parts.append("</g>")

    parts.append('<g class="rings">')
    for p in points:
        if p.get("mismatch"):
            parts.append(
                f'<circle class="ring" cx="{_fmt(px(p["x"]))}" cy="{_fmt(py(p["y"]))}" '
                f'r="{_fmt(RING_RADIUS)}" fill="none" '
                f'stroke="{class_color(int(p["predicted"]))}" stroke-width="1.5"/>'
            )
    parts.append("</g>")

    parts.append('<g class="points">')
    for p in points:
        label = p.get("true_label", p["predicted"])
        parts.append(
            f'<circle cx="{_fmt(px(p["x"]))}" cy="{_fmt(py(p["y"]))}" '
            f'r="{_fmt(POINT_RADIUS)}" fill="{class_color(int(label))}"/>'
        )
    parts.append("</g>")

    parts.append('<g class="legend" font-family="sans-serif" font-size="14">')
    for c, name in enumerate(class_names):
        parts.append(
            f'<text x="{_fmt(PLOT_SIZE + 12)}" y="{_fmt(24 + 20 * c)}" '
            f'fill="{class_color(c)}">{_escape(str(name))}</text>'
        )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")

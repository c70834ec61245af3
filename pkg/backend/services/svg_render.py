"""SVG dump of quantized layouts, for eyeballing restored predictions."""

from __future__ import annotations

from pathlib import Path

import svgwrite

from backend.models.sequences import QuantizedLayout

_PALETTE = ("#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324")


def render_layout_svg(layout: QuantizedLayout, svg_path: Path, scale: int = 12) -> None:
    dwg = svgwrite.Drawing(str(svg_path), size=(layout.grid_w * scale, layout.grid_h * scale), profile="tiny")
    dwg.add(dwg.rect(
        insert=(0, 0),
        size=(layout.grid_w * scale, layout.grid_h * scale),
        fill="white",
        stroke="black",
        stroke_width=1,
    ))
    for index, node_id in enumerate(sorted(layout.boxes)):
        item = layout.boxes[node_id]
        box = item.box
        color = _PALETTE[index % len(_PALETTE)]
        dwg.add(dwg.rect(
            insert=(box.x * scale, box.y * scale),
            size=(box.w * scale, box.h * scale),
            fill="none",
            stroke=color,
            stroke_width=2,
        ))
        dwg.add(dwg.text(
            f"{item.class_label} #{node_id}",
            insert=(box.x * scale + 3, box.y * scale + 11),
            font_size=10,
            font_family="Arial",
            fill=color,
        ))
    dwg.save()

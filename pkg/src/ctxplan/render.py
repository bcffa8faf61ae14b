"""Self-contained SVG figures of worlds, drift fields, and episode traces.

Drift regions are drawn as shaded bands (darker means stronger drift),
obstacles as solid blocks, the planned rollouts as dashed polylines, the
executed trajectory as a solid line, and every safety stop as a circled
marker. The output is plain SVG with no external references.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

from .executor import EpisodeOutcome
from .harness import Scenario

_SIZE = 640
_MARGIN = 40
_PLAN_COLORS = ["#1f77b4", "#9467bd", "#17becf", "#2ca02c", "#bcbd22", "#7f7f7f"]


class _Canvas:
    """World-to-pixel mapping plus an element buffer."""

    def __init__(self, scenario: Scenario):
        b = scenario.world.bounds
        span = max(b.width, b.height)
        self._scale = (_SIZE - 2 * _MARGIN) / span if span > 0 else 1.0
        self._x0 = b.xmin
        self._y1 = b.ymax
        self.elements: list[str] = []

    def x(self, wx: float) -> float:
        return _MARGIN + (wx - self._x0) * self._scale

    def y(self, wy: float) -> float:
        # SVG y grows downward; world y grows upward.
        return _MARGIN + (self._y1 - wy) * self._scale

    def rect(self, r, fill: str, opacity: float = 1.0, stroke: str = "none",
             cls: str = "") -> None:
        attrs = (
            f'x="{self.x(r.xmin):.2f}" y="{self.y(r.ymax):.2f}" '
            f'width="{r.width * self._scale:.2f}" height="{r.height * self._scale:.2f}" '
            f'fill="{fill}" fill-opacity="{opacity}" stroke="{stroke}"'
        )
        if cls:
            attrs += f' class="{cls}"'
        self.elements.append(f"<rect {attrs}/>")

    def polyline(self, points, stroke: str, width: float = 2.0, dashed: bool = False,
                 cls: str = "") -> None:
        if len(points) < 2:
            return
        pts = " ".join(f"{self.x(px):.2f},{self.y(py):.2f}" for px, py in points)
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        c = f' class="{cls}"' if cls else ""
        self.elements.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
            f'stroke-width="{width}"{dash}{c}/>'
        )

    def circle(self, px: float, py: float, radius: float, fill: str,
               stroke: str = "none", cls: str = "") -> None:
        c = f' class="{cls}"' if cls else ""
        self.elements.append(
            f'<circle cx="{self.x(px):.2f}" cy="{self.y(py):.2f}" r="{radius}" '
            f'fill="{fill}" stroke="{stroke}"{c}/>'
        )

    def text(self, px: float, py: float, label: str, size: int = 12,
             fill: str = "#333333") -> None:
        self.elements.append(
            f'<text x="{px:.2f}" y="{py:.2f}" font-size="{size}" '
            f'font-family="sans-serif" fill="{fill}">{escape(label)}</text>'
        )


def _drift_shade(delta: float, max_delta: float) -> float:
    if max_delta <= 0.0:
        return 0.0
    return 0.08 + 0.42 * (delta / max_delta)


def render_svg(
    scenario: Scenario, outcome: EpisodeOutcome | None, path: str | Path
) -> None:
    """Write an SVG figure of the scenario, optionally with an episode overlay."""
    canvas = _Canvas(scenario)
    world = scenario.world
    levels = scenario.drift_levels()
    max_delta = levels[-1] if levels else 0.0

    canvas.rect(world.bounds, fill="#ffffff", stroke="#222222")
    if world.default_drift > 0.0:
        canvas.rect(
            world.bounds,
            fill="#e07b39",
            opacity=_drift_shade(world.default_drift, max_delta),
            cls="drift-region",
        )
    for region in world.drift_regions:
        canvas.rect(
            region.rect,
            fill="#e07b39",
            opacity=_drift_shade(region.delta, max_delta),
            cls="drift-region",
        )
    for obstacle in world.obstacles:
        canvas.rect(obstacle, fill="#4a4a4a", cls="obstacle")
    canvas.rect(world.goal, fill="#59a14f", opacity=0.35, stroke="#2d6a2d", cls="goal")
    canvas.circle(scenario.start[0], scenario.start[1], 5.0, fill="#111111", cls="start")

    if outcome is not None:
        for plan in outcome.plans:
            color = _PLAN_COLORS[plan.index % len(_PLAN_COLORS)]
            canvas.polyline(
                plan.planned_states, stroke=color, width=1.6, dashed=True, cls="planned"
            )
        executed = [scenario.start] + [s.x_meas for s in outcome.steps]
        canvas.polyline(executed, stroke="#111111", width=2.2, cls="executed")
        for s in outcome.steps:
            if s.safety_stop:
                canvas.circle(
                    s.x_meas[0], s.x_meas[1], 5.0,
                    fill="#d62728", stroke="#7a1010", cls="safety-stop",
                )

    # Legend: one swatch per drift level, plus episode info when present.
    ly = 16
    for delta in levels:
        shade = _drift_shade(delta, max_delta)
        canvas.elements.append(
            f'<rect x="8" y="{ly - 10}" width="14" height="12" fill="#e07b39" '
            f'fill-opacity="{shade}" stroke="#999999"/>'
        )
        canvas.text(26, ly, f"drift {delta:g}")
        ly += 16
    if outcome is not None:
        status = "success" if outcome.success else "failure"
        canvas.text(
            8,
            _SIZE - 8,
            f"{outcome.variant}  seed={outcome.seed}  {status}  "
            f"replannings={outcome.replannings}",
        )

    body = "\n".join(canvas.elements)
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">\n{body}\n</svg>\n'
    )
    Path(path).write_text(svg)

"""Minimal deterministic SVG figure writer.

Hand-rolled so identical inputs produce byte-identical files: fixed float
formatting, no timestamps, no generated ids.
"""

from dataclasses import dataclass, field
from pathlib import Path

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 24, 36, 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


@dataclass
class Series:
    name: str
    xs: list[float]
    ys: list[float]
    marker: str = "circle"  # circle | triangle | none
    line: bool = True
    color: str = ""


@dataclass
class Figure:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)

    def add(self, series: Series) -> None:
        self.series.append(series)

    def to_svg(self) -> str:
        if not self.series or all(len(s.xs) == 0 for s in self.series):
            raise ValueError("figure has no data")
        xs = [x for s in self.series for x in s.xs]
        ys = [y for s in self.series for y in s.ys]
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        if x_hi == x_lo:
            x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
        pad_x = 0.04 * (x_hi - x_lo)
        pad_y = 0.06 * (y_hi - y_lo)
        x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
        y_lo, y_hi = y_lo - pad_y, y_hi + pad_y
        plot_w = WIDTH - MARGIN_L - MARGIN_R
        plot_h = HEIGHT - MARGIN_T - MARGIN_B

        def px(x: float) -> float:
            return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

        def py(y: float) -> float:
            return MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-size="15" '
            f'font-family="sans-serif">{self.title}</text>',
        ]
        # frame
        parts.append(
            f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
            f'fill="none" stroke="#333" stroke-width="1"/>'
        )
        for tx in _linspace(x_lo, x_hi, 5):
            parts.append(
                f'<line x1="{_fmt(px(tx))}" y1="{MARGIN_T + plot_h}" x2="{_fmt(px(tx))}" '
                f'y2="{MARGIN_T + plot_h + 5}" stroke="#333"/>'
            )
            parts.append(
                f'<text x="{_fmt(px(tx))}" y="{MARGIN_T + plot_h + 18}" text-anchor="middle" '
                f'font-size="11" font-family="sans-serif">{_fmt(tx)}</text>'
            )
        for ty in _linspace(y_lo, y_hi, 5):
            parts.append(
                f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py(ty))}" x2="{MARGIN_L}" '
                f'y2="{_fmt(py(ty))}" stroke="#333"/>'
            )
            parts.append(
                f'<text x="{MARGIN_L - 8}" y="{_fmt(py(ty) + 4)}" text-anchor="end" '
                f'font-size="11" font-family="sans-serif">{_fmt(ty)}</text>'
            )
        parts.append(
            f'<text x="{MARGIN_L + plot_w // 2}" y="{HEIGHT - 10}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{self.xlabel}</text>'
        )
        parts.append(
            f'<text x="16" y="{MARGIN_T + plot_h // 2}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif" transform="rotate(-90 16 {MARGIN_T + plot_h // 2})">'
            f"{self.ylabel}</text>"
        )

        for i, s in enumerate(self.series):
            color = s.color or PALETTE[i % len(PALETTE)]
            pts = [(px(x), py(y)) for x, y in zip(s.xs, s.ys)]
            if s.line and len(pts) > 1:
                coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
                parts.append(
                    f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
                )
            for x, y in pts:
                parts.append(_marker(s.marker, x, y, color))
            # legend entry
            ly = MARGIN_T + 14 + 16 * i
            lx = MARGIN_L + plot_w - 150
            parts.append(_marker(s.marker if s.marker != "none" else "circle", lx, ly - 4, color))
            parts.append(
                f'<text x="{lx + 10}" y="{ly}" font-size="11" font-family="sans-serif">{s.name}</text>'
            )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _linspace(lo: float, hi: float, n: int) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _marker(kind: str, x: float, y: float, color: str) -> str:
    if kind == "triangle":
        pts = f"{_fmt(x)},{_fmt(y - 4)} {_fmt(x - 4)},{_fmt(y + 3.5)} {_fmt(x + 4)},{_fmt(y + 3.5)}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    if kind == "none":
        return ""
    return f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}"/>'


def write_svg(path: str | Path, figure: Figure) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(figure.to_svg(), encoding="utf-8")

"""Rasterization of symbolic scenes, and measuring areas back off the raster.

Shapes are filled analytically: a pixel belongs to a shape when its center
point falls inside the shape's region, with half-open boundaries so that
integer-sized footprints come out exact.  No anti-aliasing — every pixel is
either background black or one object's pure palette color, which keeps
measured areas tight against the declared pixel areas:

  * squares and rectangles snap to whole-pixel footprints whose area is the
    closest achievable integer product to the declared area (exact for
    squares, within one row/column's worth for rectangles);
  * triangles get their base rescaled a hair so the row-by-row pixel count
    lands on the declared area;
  * circles are left alone; center sampling of a disc is already unbiased.

The symbolic dims are never altered — snapping is a rendering concern.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .scenegen import Scene, SceneObject

PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (255, 0, 0),
    "blue": (0, 0, 255),
    "white": (255, 255, 255),
    "yellow": (255, 255, 0),
    "green": (0, 255, 0),
}
BACKGROUND = (0, 0, 0)

DOWNSCALE_SIZE = 224


class RenderError(RuntimeError):
    pass


@dataclass
class RenderedImage:
    pixels: np.ndarray  # (height, width, 3) uint8

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _snap_rect(width: float, height: float, area: int) -> tuple[int, int]:
    """Integer footprint (w, h) minimizing |w*h - area|, nearest the real dims."""
    best = None
    for w in {math.floor(width), round(width), math.ceil(width)}:
        for h in {math.floor(height), round(height), math.ceil(height)}:
            if w < 1 or h < 1:
                continue
            key = (abs(w * h - area), abs(w - width) + abs(h - height), w)
            if best is None or key < best[0]:
                best = (key, (w, h))
    if best is None:
        raise RenderError(f"cannot snap rectangle {width}x{height}")
    return best[1]


def _column_count(widths: np.ndarray) -> np.ndarray:
    """Pixels per row for a span of `widths[j]` centered on an integer column."""
    half = widths / 2.0
    return np.ceil(half - 0.5) + np.floor(half + 0.5)


def _triangle_mask(obj: SceneObject) -> tuple[np.ndarray, int, int]:
    cx, cy = obj.center
    base = obj.dims["base"]
    height = obj.dims["height"]
    x0, y0, x1, y1 = obj.bbox

    top = cy - height / 2.0
    ys = np.arange(y0, y1) + 0.5
    in_rows = (ys >= top) & (ys < top + height)

    def row_widths(b: float) -> np.ndarray:
        w = b * (ys - top) / height
        return np.where(in_rows, np.maximum(w, 0.0), 0.0)

    # nudge the base so the rasterized pixel count hits pixel_area; the
    # padded bbox leaves room for the footprint to grow a little
    max_base = (x1 - x0) - 1.0
    b = base
    for _ in range(2):
        count = float(_column_count(row_widths(b)).sum())
        if count <= 0:
            break
        scale = obj.pixel_area / count
        b = min(b * scale, max_base)
    widths = row_widths(b)

    xs = np.arange(x0, x1) + 0.5
    lo = cx - widths / 2.0
    hi = cx + widths / 2.0
    mask = (xs[None, :] >= lo[:, None]) & (xs[None, :] < hi[:, None])
    mask[~in_rows, :] = False
    return mask, x0, y0


def _object_mask(obj: SceneObject) -> tuple[np.ndarray, int, int]:
    """Boolean footprint over the object's bbox window, plus window origin."""
    if obj.center is None or obj.bbox is None:
        raise RenderError(f"object {obj.id} has no placement")
    cx, cy = obj.center
    x0, y0, x1, y1 = obj.bbox
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5

    if obj.shape == "circle":
        r = obj.dims["radius"]
        mask = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2 <= r * r
        return mask, x0, y0

    if obj.shape in ("square", "rectangle"):
        if obj.shape == "square":
            w_px = h_px = round(obj.dims["side"])
        else:
            w_px, h_px = _snap_rect(
                obj.dims["width"], obj.dims["height"], obj.pixel_area
            )
        col = (xs >= cx - w_px / 2.0) & (xs < cx + w_px / 2.0)
        row = (ys >= cy - h_px / 2.0) & (ys < cy + h_px / 2.0)
        return row[:, None] & col[None, :], x0, y0

    if obj.shape == "triangle":
        return _triangle_mask(obj)

    raise RenderError(f"unknown shape {obj.shape!r}")


def render(scene: Scene) -> RenderedImage:
    """Draw every object filled in its color on a black canvas."""
    size = scene.canvas_size
    pixels = np.zeros((size, size, 3), dtype=np.uint8)
    for obj in scene.objects:
        mask, x0, y0 = _object_mask(obj)
        window = pixels[y0 : y0 + mask.shape[0], x0 : x0 + mask.shape[1]]
        window[mask] = PALETTE[obj.color]
    return RenderedImage(pixels)


def measure_area(image: RenderedImage, obj: SceneObject, scene: Scene | None = None) -> int:
    """Count pixels of the object's color inside its bbox.

    When the scene is supplied, warn if another same-colored object's bbox
    intersects this one — impossible under the disjoint-bbox invariant, but
    it would silently inflate the count, so check defensively.
    """
    if obj.bbox is None:
        raise RenderError(f"object {obj.id} has no placement")
    if scene is not None:
        for other in scene.objects:
            if other.id == obj.id or other.color != obj.color or other.bbox is None:
                continue
            ax0, ay0, ax1, ay1 = obj.bbox
            bx0, by0, bx1, by1 = other.bbox
            if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                warnings.warn(
                    f"objects {obj.id} and {other.id} share color {obj.color!r} "
                    f"with intersecting bboxes; measured area may be inflated"
                )
    x0, y0, x1, y1 = obj.bbox
    window = image.pixels[y0:y1, x0:x1]
    color = np.array(PALETTE[obj.color], dtype=np.uint8)
    return int(np.all(window == color, axis=-1).sum())


def save_png(image: RenderedImage, path) -> None:
    Image.fromarray(image.pixels, mode="RGB").save(path, format="PNG")


def downscale(image: RenderedImage, size: int = DOWNSCALE_SIZE) -> RenderedImage:
    small = Image.fromarray(image.pixels, mode="RGB").resize(
        (size, size), Image.Resampling.BILINEAR
    )
    return RenderedImage(np.asarray(small))

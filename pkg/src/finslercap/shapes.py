"""Compact sets and condenser plates as rasterizable shape descriptions.

A shape is a membership predicate over base points; rasterization marks the
grid nodes whose cell centers lie inside.  The catalog covers filled disks
and rectangles, their complements (used for enclosing plates and for
truncation boundaries that stay meaningful under mapping), thickened
segments and polylines, point blobs, the grid's outer index ring, and the
image of any catalog shape under an invertible planar map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class Shape:
    kind: str
    params: tuple

    def contains(self, X1, X2, grid=None):
        """Boolean membership at points (X1, X2); arrays broadcast."""
        k = self.kind
        p = self.params
        X1 = np.asarray(X1, dtype=float)
        X2 = np.asarray(X2, dtype=float)
        if k == "disk":
            cx, cy, r = p
            return (X1 - cx) ** 2 + (X2 - cy) ** 2 <= r * r
        if k == "disk_complement":
            cx, cy, r = p
            return (X1 - cx) ** 2 + (X2 - cy) ** 2 >= r * r
        if k == "rectangle":
            a1, a2, b1, b2 = p
            return (X1 >= a1) & (X1 <= b1) & (X2 >= a2) & (X2 <= b2)
        if k == "rect_complement":
            a1, a2, b1, b2 = p
            return ~((X1 > a1) & (X1 < b1) & (X2 > a2) & (X2 < b2))
        if k == "point_blob":
            cx, cy, r = p
            return (X1 - cx) ** 2 + (X2 - cy) ** 2 <= r * r
        if k == "polyline":
            pts, thick = p
            d2 = None
            for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
                seg = _dist2_to_segment(X1, X2, ax, ay, bx, by)
                d2 = seg if d2 is None else np.minimum(d2, seg)
            return d2 <= thick * thick
        if k == "outer_boundary":
            if grid is None:
                raise ShapeError("outer_boundary membership needs the grid")
            # index ring; geometric arguments are the node mesh
            nx, ny = grid.base_shape
            I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
            ring = (I == 0) | (I == nx - 1) | (J == 0) | (J == ny - 1)
            return np.broadcast_to(ring, np.broadcast(X1, X2).shape)
        if k == "mapped":
            inner, pmap = p
            P1, P2 = pmap.inverse(X1, X2)
            return inner.contains(P1, P2, grid=None)
        raise ShapeError(f"unknown shape kind {k!r}")

    def rasterize(self, grid):
        X1, X2 = grid.base_mesh()
        mask = self.contains(X1, X2, grid=grid)
        return np.asarray(mask, dtype=bool)


def _dist2_to_segment(X1, X2, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    if L2 == 0.0:
        return (X1 - ax) ** 2 + (X2 - ay) ** 2
    t = np.clip(((X1 - ax) * vx + (X2 - ay) * vy) / L2, 0.0, 1.0)
    px = ax + t * vx
    py = ay + t * vy
    return (X1 - px) ** 2 + (X2 - py) ** 2


def disk(cx, cy, r):
    if r <= 0:
        raise ShapeError("disk radius must be positive")
    return Shape("disk", (float(cx), float(cy), float(r)))


def disk_complement(cx, cy, r):
    if r <= 0:
        raise ShapeError("disk radius must be positive")
    return Shape("disk_complement", (float(cx), float(cy), float(r)))


def rectangle(a1, a2, b1, b2):
    if not (b1 > a1 and b2 > a2):
        raise ShapeError("rectangle corners must be ordered")
    return Shape("rectangle", (float(a1), float(a2), float(b1), float(b2)))


def rect_complement(a1, a2, b1, b2):
    if not (b1 > a1 and b2 > a2):
        raise ShapeError("rectangle corners must be ordered")
    return Shape("rect_complement", (float(a1), float(a2), float(b1), float(b2)))


def point_blob(cx, cy, r):
    if r <= 0:
        raise ShapeError("point blob radius must be positive")
    return Shape("point_blob", (float(cx), float(cy), float(r)))


def segment(p, q, thickness):
    return polyline((p, q), thickness)


def polyline(points, thickness):
    pts = tuple((float(a), float(b)) for a, b in points)
    if len(pts) < 2:
        raise ShapeError("polyline needs at least two points")
    if thickness <= 0:
        raise ShapeError("polyline thickness must be positive")
    return Shape("polyline", (pts, float(thickness)))


def outer_boundary():
    return Shape("outer_boundary", ())


def mapped(shape, planar_map):
    if shape.kind == "outer_boundary":
        raise ShapeError("outer_boundary cannot be mapped; use rect_complement")
    return Shape("mapped", (shape, planar_map))

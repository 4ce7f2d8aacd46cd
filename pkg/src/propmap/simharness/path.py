"""Arc-length parameterized planar paths: polylines with rounded corners.

Corners are replaced by circular arcs so heading is continuous and the
commanded-speed base trajectory has bounded acceleration. Beyond either
end the path continues along its end tangent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class _Piece:
    s0: float
    length: float
    p0: tuple[float, float]
    heading0: float
    curvature: float  # 0 for lines, +-1/R for arcs (left turn positive)


class PlanarPath:
    def __init__(self, waypoints, turn_radius: float = 1.0):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("a path needs at least two (x, y) waypoints")
        seg = np.diff(pts, axis=0)
        lens = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(lens <= 1e-9):
            raise ValueError("consecutive waypoints must differ")
        self.waypoints = pts
        headings = np.unwrap(np.arctan2(seg[:, 1], seg[:, 0]))

        # tangent length consumed by each interior corner
        trims = np.zeros(len(pts))
        radii = np.zeros(len(pts))
        turns = np.zeros(len(pts))
        for k in range(1, len(pts) - 1):
            turn = math.remainder(headings[k] - headings[k - 1], 2 * math.pi)
            if abs(turn) < 1e-12:
                continue
            if abs(abs(turn) - math.pi) < 1e-9:
                raise ValueError(f"waypoint {k} reverses the path")
            tan_half = math.tan(abs(turn) / 2)
            limit = 0.5 * min(lens[k - 1], lens[k])
            radius = min(turn_radius, limit / tan_half)
            trims[k] = radius * tan_half
            radii[k] = radius
            turns[k] = turn

        pieces = []
        s = 0.0
        for k in range(len(seg)):
            start = pts[k] + trims[k] * np.array([math.cos(headings[k]), math.sin(headings[k])])
            line_len = lens[k] - trims[k] - trims[k + 1]
            if line_len > 1e-12:
                pieces.append(_Piece(s, line_len, (float(start[0]), float(start[1])), float(headings[k]), 0.0))
                s += line_len
            if k + 1 < len(pts) - 1 and turns[k + 1] != 0.0:
                corner = pts[k + 1] - trims[k + 1] * np.array([math.cos(headings[k]), math.sin(headings[k])])
                curv = math.copysign(1.0 / radii[k + 1], turns[k + 1])
                arc_len = radii[k + 1] * abs(turns[k + 1])
                pieces.append(_Piece(s, arc_len, (float(corner[0]), float(corner[1])), float(headings[k]), curv))
                s += arc_len
        self.pieces = pieces
        self.length = s
        self._starts = np.array([p.s0 for p in pieces])

    def _eval(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        idx = np.clip(np.searchsorted(self._starts, s, side="right") - 1, 0, len(self.pieces) - 1)
        x = np.empty_like(s)
        y = np.empty_like(s)
        hd = np.empty_like(s)
        kappa = np.zeros_like(s)
        for k, p in enumerate(self.pieces):
            m = idx == k
            if not m.any():
                continue
            u = s[m] - p.s0
            # extrapolate straight beyond the path ends
            curv = p.curvature
            if curv != 0.0 and (k == 0 or k == len(self.pieces) - 1):
                u_in = np.clip(u, 0.0, p.length)
            else:
                u_in = u
            if curv == 0.0:
                x[m] = p.p0[0] + u * math.cos(p.heading0)
                y[m] = p.p0[1] + u * math.sin(p.heading0)
                hd[m] = p.heading0
            else:
                h = p.heading0 + curv * u_in
                x[m] = p.p0[0] + (np.sin(h) - math.sin(p.heading0)) / curv
                y[m] = p.p0[1] - (np.cos(h) - math.cos(p.heading0)) / curv
                extra = u - u_in
                x[m] += extra * np.cos(h)
                y[m] += extra * np.sin(h)
                hd[m] = h
                kappa[m] = np.where(extra == 0, curv, 0.0)
        return x, y, hd, kappa

    def position(self, s):
        x, y, _, _ = self._eval(s)
        return np.column_stack((x, y))

    def heading(self, s):
        return self._eval(s)[2]

    def curvature(self, s):
        return self._eval(s)[3]

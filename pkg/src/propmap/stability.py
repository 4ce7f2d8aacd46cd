"""Gravito-inertial acceleration and tumbling-axis stability margins.

The support polyhedron has one triangular face per pair of adjacent support
contacts on the convex hull, spanned by the CoM and the two contacts. Face
normals point away from the support region. With only two contacts (or
collinear ones) the single tumbling axis yields two faces with opposite
normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .telemetry import MASS_RTOL

COINCIDENT_TOL = 1e-6


class StabilityError(ValueError):
    pass


class NoSupport(StabilityError):
    """Fewer than two stance contacts."""


class DegenerateSupport(StabilityError):
    """Contacts coincide, or the CoM lies on the single tumbling axis."""


class UndefinedMargin(StabilityError):
    """Zero gravito-inertial acceleration."""


@dataclass(frozen=True)
class GiaState:
    a_gia: np.ndarray


@dataclass(frozen=True)
class SupportPolyhedron:
    apex: np.ndarray
    contacts: np.ndarray  # hull vertices, counterclockwise seen from above
    normals: np.ndarray  # (n_faces, 3) outward, unnormalized
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class StabilityMargins:
    giim: float
    giam: float
    contact_count: int


def gia(gravity, total_mass: float, seg_masses, seg_accels) -> GiaState:
    """``g - (1/m) Σ m_i a_i``."""
    m_i = np.asarray(seg_masses, dtype=float)
    a_i = np.asarray(seg_accels, dtype=float).reshape(-1, 3)
    if m_i.shape[0] != a_i.shape[0]:
        raise ValueError("segment mass and acceleration counts differ")
    if abs(float(np.sum(m_i)) - total_mass) > MASS_RTOL * total_mass:
        raise ValueError(f"segment masses sum to {np.sum(m_i)!r}, total mass is {total_mass!r}")
    return GiaState(np.asarray(gravity, dtype=float) - (m_i @ a_i) / total_mass)


def _ground_basis(gravity) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e1, e2) spanning the plane normal to gravity, e1 x e2 = up."""
    return _ground_basis_cached(tuple(float(v) for v in np.asarray(gravity, dtype=float).ravel()))


@lru_cache(maxsize=64)
def _ground_basis_cached(gravity: tuple) -> tuple[np.ndarray, np.ndarray]:
    g = np.array(gravity)
    up = -g / np.linalg.norm(g)
    helper = np.array([1.0, 0.0, 0.0]) if abs(up[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - np.dot(helper, up) * up
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(up, e1)
    return e1, e2


def _ground_matrix(gravity) -> np.ndarray:
    """(3, 2) projection onto the ground plane."""
    return _ground_matrix_cached(tuple(float(v) for v in np.asarray(gravity, dtype=float).ravel()))


@lru_cache(maxsize=64)
def _ground_matrix_cached(gravity: tuple) -> np.ndarray:
    m = np.column_stack(_ground_basis_cached(gravity))
    m.flags.writeable = False
    return m


def _span(pts) -> float:
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return max(max(xs) - min(xs), max(ys) - min(ys))


def _dist2(a, b) -> float:
    return (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2


def _cross3(a, b) -> np.ndarray:
    """Row-wise cross product of (k, 3) arrays."""
    out = np.empty(a.shape)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _cross2(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_ccw(points_2d) -> list[int]:
    """Indices of the convex hull, counterclockwise (monotone chain).

    Collinear points on hull edges are dropped. Ties sort by x then y, so
    the output order is deterministic. A degenerate input returns the two
    extreme points of the segment (or one index when all coincide).
    """
    pts = [(float(p[0]), float(p[1]), k) for k, p in enumerate(points_2d)]
    pts.sort()
    if len(pts) <= 1:
        return [p[2] for p in pts]
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return [p[2] for p in hull]


def build_polyhedron(com, stance_contacts, gravity) -> SupportPolyhedron:
    com = np.asarray(com, dtype=float)
    contacts = np.asarray(stance_contacts, dtype=float).reshape(-1, 3)
    if contacts.shape[0] < 2:
        raise NoSupport(f"{contacts.shape[0]} stance contacts")
    proj = (contacts @ _ground_matrix(gravity)).tolist()
    if _span(proj) <= COINCIDENT_TOL:
        raise DegenerateSupport("all contacts coincide")

    hull = convex_hull_ccw(proj)
    if len(hull) >= 3:
        # near-collinear triangles collapse to their extreme points
        area2 = 0.0
        for k in range(len(hull)):
            a, b = proj[hull[k]], proj[hull[(k + 1) % len(hull)]]
            area2 += a[0] * b[1] - a[1] * b[0]
        if abs(area2) <= COINCIDENT_TOL * _span([proj[k] for k in hull]):
            pairs = [(a, b) for ia, a in enumerate(hull) for b in hull[ia + 1 :]]
            hull = list(max(pairs, key=lambda ab: _dist2(proj[ab[0]], proj[ab[1]])))
    if len(hull) == 2:
        i, j = hull
        n = _cross3((contacts[i] - com)[None, :], (contacts[j] - com)[None, :])[0]
        if float(n @ n) <= 1e-24:
            raise DegenerateSupport("CoM lies on the tumbling axis")
        verts = contacts[[i, j]]
        return SupportPolyhedron(com, verts, np.array([n, -n]), ((0, 1), (1, 0)))

    verts = contacts[hull]
    k = len(hull)
    edges = tuple((a, (a + 1) % k) for a in range(k))
    rel = verts - com
    normals = _cross3(rel, np.roll(rel, -1, axis=0))
    if np.any(np.einsum("ij,ij->i", normals, normals) <= 1e-24):
        raise DegenerateSupport("CoM coplanar with a support edge")
    return SupportPolyhedron(com, verts, normals, edges)


def _check_gia(g: GiaState) -> tuple[np.ndarray, float]:
    a = np.asarray(g.a_gia, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0.0 or not math.isfinite(norm):
        raise UndefinedMargin("GIA has zero norm")
    return a, norm


def giim(poly: SupportPolyhedron, g: GiaState) -> float:
    """Inclination margin, rad: min face angle minus pi/2."""
    a, _ = _check_gia(g)
    n = poly.normals
    cx = n[:, 1] * a[2] - n[:, 2] * a[1]
    cy = n[:, 2] * a[0] - n[:, 0] * a[2]
    cz = n[:, 0] * a[1] - n[:, 1] * a[0]
    # atan2 stays accurate where arccos of the cosine would not
    angles = np.arctan2(np.sqrt(cx * cx + cy * cy + cz * cz), n @ a)
    return float(np.min(angles)) - math.pi / 2


def giam(poly: SupportPolyhedron, g: GiaState) -> float:
    """Acceleration margin, m/s^2: min over faces of ``-n.a/|n|``."""
    a = np.asarray(g.a_gia, dtype=float)
    n = poly.normals
    return float(np.min(-(n @ a) / np.sqrt(np.einsum("ij,ij->i", n, n))))


def margins(com, stance_contacts, gravity, g: GiaState) -> StabilityMargins:
    poly = build_polyhedron(com, stance_contacts, gravity)
    return StabilityMargins(giim(poly, g), giam(poly, g), len(np.asarray(stance_contacts).reshape(-1, 3)))

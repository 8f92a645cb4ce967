"""Scatterer domains and interface-conforming triangulations of the truncation disk.

A domain is a closed, counter-clockwise chain of exact boundary pieces
(segments, circular arcs, polar curves, graphs).  The mesher samples the
pieces at the local element size, hands the resulting planar straight line
graph to Triangle, then grades the mesh toward the tracked corner.
All analysis code queries the exact pieces, never the polyline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import triangle

TAG_INTERFACE = "interface"
TAG_TRUNCATION = "truncation"
_MARK_TRUNCATION = 1
_MARK_INTERFACE = 2

GRADING_EXPONENT = 0.7
MIN_ANGLE_DEG = 30.0


class MeshingError(RuntimeError):
    """Raised when a domain cannot be meshed; names the offending feature."""


# ---------------------------------------------------------------------------
# Boundary pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: tuple[float, float]
    end: tuple[float, float]

    def points(self, t):
        t = np.asarray(t, dtype=float)[:, None]
        a, b = np.asarray(self.start), np.asarray(self.end)
        return (1.0 - t) * a + t * b

    def derivative(self, t):
        d = np.asarray(self.end, dtype=float) - np.asarray(self.start, dtype=float)
        return np.broadcast_to(d, (len(np.atleast_1d(t)), 2)).copy()

    def project(self, pts):
        a, b = np.asarray(self.start), np.asarray(self.end)
        d = b - a
        t = np.clip(((pts - a) @ d) / (d @ d), 0.0, 1.0)
        return a + t[:, None] * d


@dataclass(frozen=True)
class CircleArc:
    center: tuple[float, float]
    radius: float
    angle_start: float
    angle_end: float

    def _angle(self, t):
        return self.angle_start + np.asarray(t, dtype=float) * (self.angle_end - self.angle_start)

    def points(self, t):
        a = self._angle(t)
        c = np.asarray(self.center)
        return c + self.radius * np.c_[np.cos(a), np.sin(a)]

    def derivative(self, t):
        a = self._angle(t)
        s = self.radius * (self.angle_end - self.angle_start)
        return s * np.c_[-np.sin(a), np.cos(a)]

    def project(self, pts):
        c = np.asarray(self.center)
        d = pts - c
        n = np.linalg.norm(d, axis=1)
        n[n == 0] = 1.0
        return c + self.radius * d / n[:, None]


@dataclass(frozen=True)
class PolarArc:
    """Curve r = r(phi) about the origin, phi from angle_start to angle_end."""

    radius_fn: Callable[[np.ndarray], np.ndarray]
    radius_deriv: Callable[[np.ndarray], np.ndarray]
    angle_start: float
    angle_end: float

    def _angle(self, t):
        return self.angle_start + np.asarray(t, dtype=float) * (self.angle_end - self.angle_start)

    def points(self, t):
        a = self._angle(t)
        r = self.radius_fn(a)
        return np.c_[r * np.cos(a), r * np.sin(a)]

    def derivative(self, t):
        a = self._angle(t)
        r, dr = self.radius_fn(a), self.radius_deriv(a)
        s = self.angle_end - self.angle_start
        return s * np.c_[dr * np.cos(a) - r * np.sin(a), dr * np.sin(a) + r * np.cos(a)]

    def project(self, pts):
        a = np.arctan2(pts[:, 1], pts[:, 0])
        r = self.radius_fn(a)
        return np.c_[r * np.cos(a), r * np.sin(a)]


@dataclass(frozen=True)
class GraphArc:
    """Curve x2 = eta(x1), x1 from x_start to x_end."""

    eta: Callable[[np.ndarray], np.ndarray]
    eta_deriv: Callable[[np.ndarray], np.ndarray]
    x_start: float
    x_end: float

    def points(self, t):
        x = self.x_start + np.asarray(t, dtype=float) * (self.x_end - self.x_start)
        return np.c_[x, self.eta(x)]

    def derivative(self, t):
        x = self.x_start + np.asarray(t, dtype=float) * (self.x_end - self.x_start)
        s = self.x_end - self.x_start
        return s * np.c_[np.ones_like(x), self.eta_deriv(x)]

    def project(self, pts):
        return np.c_[pts[:, 0], self.eta(pts[:, 0])]


def _clustered_parameters(n: int = 4001) -> np.ndarray:
    """Parameter grid on [0,1], uniform plus geometric clustering at both ends."""
    geo = np.geomspace(1e-9, 0.05, 200)
    t = np.concatenate([np.linspace(0.0, 1.0, n), geo, 1.0 - geo])
    return np.unique(np.clip(t, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Domain specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Scatterer D with a tracked boundary point (the corner).

    ``pieces`` is a closed counter-clockwise chain; the corner point is the
    start of the first piece.  ``outer_radius`` is the nominal size used for
    mesh-size preconditions.
    """

    kind: str
    corner_point: tuple[float, float]
    corner_angle: float
    outer_radius: float
    pieces: tuple
    contains_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    corner_direction: float = 0.0  # angle of the first ray leaving the corner

    def __post_init__(self):
        if not (0.0 < self.corner_angle < 2.0 * math.pi):
            raise ValueError(f"corner angle {self.corner_angle} not in (0, 2*pi)")

    @property
    def is_corner(self) -> bool:
        return abs(self.corner_angle - math.pi) > 1e-12

    def contains(self, pts) -> np.ndarray:
        """Closed-set membership test against the exact boundary."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.contains_fn(pts)

    def boundary_samples(self, n_per_piece: int = 4001) -> np.ndarray:
        t = _clustered_parameters(n_per_piece)
        return np.concatenate([p.points(t) for p in self.pieces])

    @cached_property
    def extent(self) -> float:
        """Largest distance from the origin (truncation centre) to the boundary."""
        return float(np.max(np.linalg.norm(self.boundary_samples(2001), axis=1)))


def _angle_in(theta, lo, width, tol=1e-13):
    return np.mod(theta - lo + tol, 2.0 * math.pi) <= width + 2 * tol


def build_sector_domain(theta0: float, scatterer_radius: float) -> DomainSpec:
    """Pie slice {r e^{i phi}: 0 <= phi <= theta0, r <= radius}, corner at the origin."""
    if not (0.0 < theta0 < 2.0 * math.pi):
        raise ValueError(f"theta0 = {theta0} must lie in (0, 2*pi)")
    a = float(scatterer_radius)
    if a <= 0:
        raise ValueError("scatterer radius must be positive")
    far = (a * math.cos(theta0), a * math.sin(theta0))
    pieces = (
        Segment((0.0, 0.0), (a, 0.0)),
        CircleArc((0.0, 0.0), a, 0.0, theta0),
        Segment(far, (0.0, 0.0)),
    )

    def contains(pts):
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return (r <= a * (1 + 1e-12)) & (_angle_in(th, 0.0, theta0) | (r < 1e-14))

    return DomainSpec("sector", (0.0, 0.0), float(theta0), a, pieces, contains)


def build_disk_domain(radius: float, center=(0.0, 0.0)) -> DomainSpec:
    """Disk; the tracked point is the rightmost boundary point (a smooth point)."""
    c = (float(center[0]), float(center[1]))
    a = float(radius)
    pieces = (CircleArc(c, a, 0.0, 2.0 * math.pi),)

    def contains(pts):
        return np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= a * (1 + 1e-12)

    return DomainSpec("disk", (c[0] + a, c[1]), math.pi, a + math.hypot(*c), pieces, contains,
                      corner_direction=math.pi / 2)


def build_star_domain(radius: float, eps: float = 0.1, lobes: int = 3) -> DomainSpec:
    """Smooth star-shaped domain r(phi) = radius (1 + eps cos(lobes phi))."""
    if not (0.0 <= eps < 1.0):
        raise ValueError("eps must lie in [0, 1)")
    a = float(radius)

    def rfun(phi):
        return a * (1.0 + eps * np.cos(lobes * phi))

    def drfun(phi):
        return -a * eps * lobes * np.sin(lobes * phi)

    pieces = (PolarArc(rfun, drfun, 0.0, 2.0 * math.pi),)

    def contains(pts):
        return np.hypot(pts[:, 0], pts[:, 1]) <= rfun(np.arctan2(pts[:, 1], pts[:, 0])) * (1 + 1e-12)

    return DomainSpec("star", (a * (1 + eps), 0.0), math.pi, a * (1 + eps), pieces, contains,
                      corner_direction=math.pi / 2)


def build_graph_domain(eta, eta_deriv, half_width: float, height: float,
                       slopes: tuple[float, float] | None = None) -> DomainSpec:
    """Region {eta(x1) <= x2 <= height, |x1| <= half_width} with eta(0) = 0.

    The tracked point is the origin.  ``slopes`` are the one-sided derivatives
    eta'(0-) and eta'(0+); they default to numerical one-sided values.
    """
    w, top = float(half_width), float(height)
    if slopes is None:
        d = 1e-9
        slopes = (float(eta_deriv(np.array([-d]))[0]), float(eta_deriv(np.array([d]))[0]))
    angle = math.pi - math.atan(slopes[1]) + math.atan(slopes[0])
    right = (w, float(eta(np.array([w]))[0]))
    left = (-w, float(eta(np.array([-w]))[0]))
    if min(right[1], left[1]) >= top:
        raise ValueError("height must exceed the graph at the lateral edges")
    pieces = (
        GraphArc(eta, eta_deriv, 0.0, w),
        Segment(right, (w, top)),
        Segment((w, top), (-w, top)),
        Segment((-w, top), left),
        GraphArc(eta, eta_deriv, -w, 0.0),
    )

    def contains(pts):
        x, y = pts[:, 0], pts[:, 1]
        return (np.abs(x) <= w * (1 + 1e-12)) & (y >= eta(x) - 1e-13) & (y <= top + 1e-13)

    return DomainSpec("graph-corner", (0.0, 0.0), angle, math.hypot(w, top), pieces, contains,
                      corner_direction=math.atan(slopes[1]))


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeshedDomain:
    vertices: np.ndarray          # (N, 2)
    triangles: np.ndarray         # (T, 3), counter-clockwise
    interface_edges: np.ndarray   # (E, 2)
    interface_normals: np.ndarray  # (E, 2), unit, pointing into D
    truncation_edges: np.ndarray  # (F, 2)
    in_scatterer: np.ndarray      # (T,) bool
    corner_vertex: int
    truncation_radius: float
    mesh_size: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def truncation_vertices(self) -> np.ndarray:
        """Vertices on the truncation circle, sorted by polar angle."""
        idx = np.unique(self.truncation_edges)
        ang = np.arctan2(self.vertices[idx, 1], self.vertices[idx, 0])
        return idx[np.argsort(ang, kind="stable")]

    def min_angles_deg(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        out = np.full(len(p), 180.0)
        for k in range(3):
            a, b, c = p[:, k], p[:, (k + 1) % 3], p[:, (k + 2) % 3]
            u, v = b - a, c - a
            cosang = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            out = np.minimum(out, np.degrees(np.arccos(np.clip(cosang, -1, 1))))
        return out

    def edge_lengths(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], 1)

    def local_size(self, x0) -> float:
        """Longest edge among triangles touching the nearest vertex to ``x0``."""
        x0 = np.asarray(x0, dtype=float)
        v = int(np.argmin(np.linalg.norm(self.vertices - x0, axis=1)))
        mask = np.any(self.triangles == v, axis=1)
        return float(self.edge_lengths()[mask].max())


def size_field(spec: DomainSpec, h: float, R: float, grading: float = GRADING_EXPONENT):
    """Target element size h (d/R)^grading near a genuine corner, h elsewhere."""
    corner = np.asarray(spec.corner_point, dtype=float)
    floor = (h / R) ** grading

    def size(pts):
        pts = np.atleast_2d(pts)
        if not spec.is_corner:
            return np.full(len(pts), h)
        d = np.linalg.norm(pts - corner, axis=1)
        return h * np.clip((d / R) ** grading, floor, 1.0)

    return size


def _sample_piece(piece, size, spacing_factor=0.9):
    t = _clustered_parameters()
    pts = piece.points(t)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    mid = 0.5 * (pts[1:] + pts[:-1])
    density = seg / (spacing_factor * size(mid))
    count = np.concatenate([[0.0], np.cumsum(density)])
    n = max(int(math.ceil(count[-1])), 2)
    levels = np.linspace(0.0, count[-1], n + 1)
    tk = np.interp(levels, count, t)
    tk[0], tk[-1] = 0.0, 1.0
    return piece.points(tk)


def _build_pslg(spec: DomainSpec, size, R: float):
    verts: list[np.ndarray] = []
    segs: list[tuple[int, int, int]] = []

    # interface chain: pieces share endpoints, corner is vertex 0
    chain = []
    for piece in spec.pieces:
        p = _sample_piece(piece, size)
        chain.append(p[:-1])
    ring = np.concatenate(chain)
    ring[0] = spec.corner_point
    n_ring = len(ring)
    verts.append(ring)
    segs += [(i, (i + 1) % n_ring, _MARK_INTERFACE) for i in range(n_ring)]

    # truncation circle
    trunc = CircleArc((0.0, 0.0), R, 0.0, 2 * math.pi)
    circ = _sample_piece(trunc, size)[:-1]
    base = n_ring
    verts.append(circ)
    segs += [(base + i, base + (i + 1) % len(circ), _MARK_TRUNCATION) for i in range(len(circ))]
    v = np.concatenate(verts)
    s = np.array(segs)
    return v, s[:, :2], s[:, 2:]


def _project_boundary(spec, R, verts, seg, marks):
    """Move Triangle's Steiner points on curved pieces back onto the exact curve."""
    verts = verts.copy()
    corner = np.asarray(spec.corner_point)
    trunc = np.unique(seg[marks[:, 0] == _MARK_TRUNCATION])
    r = np.linalg.norm(verts[trunc], axis=1)
    verts[trunc] *= (R / r)[:, None]
    iface = np.unique(seg[marks[:, 0] == _MARK_INTERFACE])
    pts = verts[iface]
    best = pts.copy()
    best_d = np.full(len(pts), np.inf)
    for piece in spec.pieces:
        q = piece.project(pts)
        d = np.linalg.norm(q - pts, axis=1)
        take = d < best_d
        best[take], best_d[take] = q[take], d[take]
    keep_corner = np.linalg.norm(pts - corner, axis=1) == 0
    best[keep_corner] = corner
    verts[iface] = best
    return verts


def mesh_domain(spec: DomainSpec, h: float, R: float, grading: float = GRADING_EXPONENT,
                max_passes: int = 40) -> MeshedDomain:
    """Interface-conforming triangulation of the disk B_R, graded toward the corner."""
    if R <= spec.extent:
        raise MeshingError(f"truncation radius {R} does not enclose the scatterer (extent {spec.extent:.4g})")
    if h >= spec.outer_radius / 4:
        raise MeshingError(f"mesh size {h} too large for scatterer radius {spec.outer_radius}")

    size = size_field(spec, h, R, grading)
    v, s, sm = _build_pslg(spec, size, R)
    opts = f"pq{MIN_ANGLE_DEG:g}"
    amax = math.sqrt(3) / 4 * h * h
    mesh = triangle.triangulate(dict(vertices=v, segments=s, segment_markers=sm), f"{opts}a{amax:.17g}")
    for _ in range(max_passes):
        P, T = mesh["vertices"], mesh["triangles"]
        cen = P[T].mean(axis=1)
        target = math.sqrt(3) / 4 * size(cen) ** 2
        e1, e2 = P[T[:, 1]] - P[T[:, 0]], P[T[:, 2]] - P[T[:, 0]]
        area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.all(area <= 1.2 * target):
            break
        mesh["triangle_max_area"] = target[:, None]
        mesh = triangle.triangulate(mesh, f"r{opts}a")
    else:
        raise MeshingError("graded refinement did not converge near the corner")

    P = _project_boundary(spec, R, mesh["vertices"], mesh["segments"], mesh["segment_markers"])
    T = mesh["triangles"].astype(np.int64)
    e1, e2 = P[T[:, 1]] - P[T[:, 0]], P[T[:, 2]] - P[T[:, 0]]
    signed = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    flip = signed < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    if np.any(np.abs(signed) <= 0):
        raise MeshingError("degenerate triangle after boundary projection")

    seg, marks = mesh["segments"].astype(np.int64), mesh["segment_markers"][:, 0]
    iface = seg[marks == _MARK_INTERFACE]
    trunc = seg[marks == _MARK_TRUNCATION]

    in_d = spec.contains(P[T].mean(axis=1))
    normals = _interface_normals(P, T, in_d, iface)

    corner = np.asarray(spec.corner_point)
    dist = np.linalg.norm(P - corner, axis=1)
    cv = int(np.argmin(dist))
    if dist[cv] != 0.0:
        raise MeshingError("corner point is not a mesh vertex")
    return MeshedDomain(P, T, iface, normals, trunc, in_d, cv, float(R), float(h))


def _interface_normals(P, T, in_d, iface):
    """Unit normals of interface edges, oriented into the scatterer."""
    key = {}
    for t_idx, tri in enumerate(T):
        if not in_d[t_idx]:
            continue
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            key[(min(a, b), max(a, b))] = tri[(k + 2) % 3]
    out = np.zeros((len(iface), 2))
    for e, (a, b) in enumerate(iface):
        third = key.get((min(a, b), max(a, b)))
        if third is None:
            raise MeshingError(f"interface edge ({a}, {b}) has no adjacent scatterer triangle")
        d = P[b] - P[a]
        n = np.array([-d[1], d[0]]) / np.hypot(*d)
        if n @ (P[third] - P[a]) < 0:
            n = -n
        out[e] = n
    return out


# ---------------------------------------------------------------------------
# Mesh text format
# ---------------------------------------------------------------------------


def write_mesh(mesh: MeshedDomain, path, node_values: np.ndarray | None = None) -> None:
    """Write the documented mesh text format, optionally followed by nodal values."""
    lines = [f"nodes {mesh.n_vertices} triangles {len(mesh.triangles)} "
             f"edges {len(mesh.interface_edges) + len(mesh.truncation_edges)}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    for (i, j), (nx, ny) in zip(mesh.interface_edges, mesh.interface_normals):
        lines.append(f"{i} {j} {TAG_INTERFACE} {nx:.17g} {ny:.17g}")
    for i, j in mesh.truncation_edges:
        d = mesh.vertices[i] + mesh.vertices[j]
        n = d / np.linalg.norm(d)
        lines.append(f"{i} {j} {TAG_TRUNCATION} {n[0]:.17g} {n[1]:.17g}")
    if node_values is not None:
        lines += [f"{z.real:.17g} {z.imag:.17g}" for z in np.asarray(node_values, dtype=complex)]
    lines.append(f"# corner_vertex {mesh.corner_vertex}")
    lines.append(f"# truncation_radius {mesh.truncation_radius:.17g}")
    lines.append(f"# mesh_size {mesh.mesh_size:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> tuple[MeshedDomain, np.ndarray | None]:
    """Inverse of :func:`write_mesh`; scatterer triangles are recovered by flood fill."""
    raw = Path(path).read_text().splitlines()
    meta = {}
    body = []
    for line in raw:
        if line.startswith("#"):
            parts = line[1:].split()
            meta[parts[0]] = parts[1]
        elif line.strip():
            body.append(line)
    hdr = body[0].split()
    n, t, e = int(hdr[1]), int(hdr[3]), int(hdr[5])
    P = np.array([[float(x) for x in ln.split()] for ln in body[1:1 + n]])
    T = np.array([[int(x) for x in ln.split()] for ln in body[1 + n:1 + n + t]], dtype=np.int64)
    iface, normals, trunc = [], [], []
    for ln in body[1 + n + t:1 + n + t + e]:
        i, j, tag, nx, ny = ln.split()
        if tag == TAG_INTERFACE:
            iface.append((int(i), int(j)))
            normals.append((float(nx), float(ny)))
        else:
            trunc.append((int(i), int(j)))
    values = None
    rest = body[1 + n + t + e:]
    if rest:
        arr = np.array([[float(x) for x in ln.split()] for ln in rest])
        values = arr[:, 0] + 1j * arr[:, 1]
    iface_a = np.array(iface, dtype=np.int64).reshape(-1, 2)
    in_d = _flood_fill_inside(T, iface_a, np.array(trunc, dtype=np.int64).reshape(-1, 2))
    mesh = MeshedDomain(P, T, iface_a, np.array(normals).reshape(-1, 2),
                        np.array(trunc, dtype=np.int64).reshape(-1, 2), in_d,
                        int(meta.get("corner_vertex", 0)),
                        float(meta.get("truncation_radius", np.linalg.norm(P, axis=1).max())),
                        float(meta.get("mesh_size", "nan")))
    return mesh, values


def _flood_fill_inside(T, iface, trunc):
    blocked = {(min(a, b), max(a, b)) for a, b in iface}
    owners: dict[tuple[int, int], list[int]] = {}
    for t_idx, tri in enumerate(T):
        for k in range(3):
            a, b = tri[k], tri[(k + 1) % 3]
            owners.setdefault((min(a, b), max(a, b)), []).append(t_idx)
    outside = np.zeros(len(T), dtype=bool)
    trunc_keys = {(min(a, b), max(a, b)) for a, b in trunc}
    stack = [owners[k][0] for k in trunc_keys]
    while stack:
        t_idx = stack.pop()
        if outside[t_idx]:
            continue
        outside[t_idx] = True
        tri = T[t_idx]
        for k in range(3):
            key = (min(tri[k], tri[(k + 1) % 3]), max(tri[k], tri[(k + 1) % 3]))
            if key in blocked:
                continue
            stack.extend(o for o in owners[key] if not outside[o])
    return ~outside


# ---------------------------------------------------------------------------
# Boundary analysis
# ---------------------------------------------------------------------------


def weak_flatness_check(spec: DomainSpec, e: Sequence[float], delta: float,
                        r_max: float | None = None, h_min: float = 1e-6) -> float:
    """Largest r with boundary ∩ B_r(x0) inside the slab |(x - x0).e| <= delta r.

    The condition is checked on a geometric grid of radii in [h_min, r_max];
    the returned radius is the last one before the first failure, 0 if the
    slab condition already fails at ``h_min``.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    x0 = np.asarray(spec.corner_point, dtype=float)
    if r_max is None:
        r_max = 0.5 * spec.outer_radius
    pts = spec.boundary_samples(20001)
    d = np.linalg.norm(pts - x0, axis=1)
    proj = np.abs((pts - x0) @ e)
    order = np.argsort(d)
    d, running = d[order], np.maximum.accumulate(proj[order])
    radii = np.geomspace(h_min, r_max, 2000)
    idx = np.searchsorted(d, radii, side="right") - 1
    worst = np.where(idx >= 0, running[np.clip(idx, 0, None)], 0.0)
    ok = worst <= delta * radii
    if not ok[0]:
        return 0.0
    if ok.all():
        return float(r_max)
    return float(radii[np.argmin(ok) - 1])

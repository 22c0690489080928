"""Conforming triangle meshes with newest vertex bisection.

Triangles are stored counter-clockwise with the *newest vertex* in local
slot 0, so the refinement edge of every element is the edge opposite local
vertex 0.  Local edge ``k`` of a triangle is always the edge opposite local
vertex ``k``.

Edges are oriented by their adjacent triangles: ``edge_tris[e, 0]`` is the
lower triangle id and the unit normal ``edge_normals[e]`` points out of it
(towards ``edge_tris[e, 1]``, or out of the domain on boundary edges, where
``edge_tris[e, 1] == -1``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Rectangle:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int = 1
    ny: int = 1

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)


@dataclass(frozen=True)
class Square:
    """The square (-s, s)^2."""
    s: float
    n: int = 2

    @property
    def area(self):
        return 4.0 * self.s**2


@dataclass(frozen=True)
class LShape:
    """(-s, s)^2 with the closed quadrant [0, s) x (-s, 0] removed."""
    s: float
    n: int = 1

    @property
    def area(self):
        return 3.0 * self.s**2


class TriMesh:
    """Immutable conforming triangulation.

    Parameters
    ----------
    vertices : (nv, 2) array
    triangles : (nt, 3) int array
        Counter-clockwise vertex triples; local vertex 0 is the vertex
        opposite the refinement edge.
    """

    def __init__(self, vertices, triangles):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.vertices.flags.writeable = False
        self.triangles.flags.writeable = False
        self._build()

    # -- construction ------------------------------------------------------
    def _build(self):
        p, t = self.vertices, self.triangles
        nt = len(t)
        a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        if np.any(cross <= 0.0):
            raise MeshError("triangles must have positive counter-clockwise orientation")
        self.areas = 0.5 * cross

        # half edge k of triangle T runs t[T, k+1] -> t[T, k+2]
        tail = t[:, [1, 2, 0]].ravel()
        head = t[:, [2, 0, 1]].ravel()
        lo, hi = np.minimum(tail, head), np.maximum(tail, head)
        key = lo * len(p) + hi
        order = np.lexsort((np.repeat(np.arange(nt), 3), key))
        skey = key[order]
        first = np.r_[True, skey[1:] != skey[:-1]]
        edge_of_sorted = np.cumsum(first) - 1
        ne = int(edge_of_sorted[-1]) + 1 if nt else 0
        counts = np.bincount(edge_of_sorted, minlength=ne)
        if np.any(counts > 2):
            raise MeshError("an edge is shared by more than two triangles")

        half_edge_id = np.empty(3 * nt, dtype=np.int64)
        half_edge_id[order] = edge_of_sorted
        self.tri_edges = half_edge_id.reshape(nt, 3)

        start = np.flatnonzero(first)
        self.edges = np.column_stack([lo[order][start], hi[order][start]])
        edge_tris = -np.ones((ne, 2), dtype=np.int64)
        edge_local = -np.ones((ne, 2), dtype=np.int64)
        edge_tris[:, 0] = order[start] // 3
        edge_local[:, 0] = order[start] % 3
        two = counts == 2
        second = order[start[two] + 1]
        edge_tris[two, 1] = second // 3
        edge_local[two, 1] = second % 3
        self.edge_tris = edge_tris
        self.edge_local = edge_local

        d = p[self.edges[:, 1]] - p[self.edges[:, 0]]
        self.edge_lengths = np.hypot(d[:, 0], d[:, 1])
        normal = np.column_stack([d[:, 1], -d[:, 0]]) / self.edge_lengths[:, None]
        # orient out of the first (lower id) triangle
        t0 = edge_tris[:, 0]
        k0 = edge_local[:, 0]
        opposite = p[t[t0, k0]]
        mid = 0.5 * (p[self.edges[:, 0]] + p[self.edges[:, 1]])
        flip = np.einsum("ij,ij->i", normal, mid - opposite) < 0.0
        normal[flip] *= -1.0
        self.edge_normals = normal

        self.boundary_edges = edge_tris[:, 1] < 0
        self.interior_edges = ~self.boundary_edges
        self.boundary_vertices = np.zeros(len(p), dtype=bool)
        self.boundary_vertices[self.edges[self.boundary_edges].ravel()] = True
        self.diameters = self.edge_lengths[self.tri_edges].max(axis=1)

    # -- simple queries ----------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def refinement_edges(self):
        """Edge id of each triangle's refinement edge (local edge 0)."""
        return self.tri_edges[:, 0]

    @property
    def ndof(self):
        return 3 * self.n_triangles

    def total_area(self):
        return float(self.areas.sum())

    def outward_normals(self):
        """(nt, 3, 2) outward unit normals of each triangle, per local edge."""
        n = self.edge_normals[self.tri_edges]
        sign = np.where(self.edge_tris[self.tri_edges, 0] == np.arange(self.n_triangles)[:, None], 1.0, -1.0)
        return n * sign[:, :, None]

    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def check_conforming(self):
        """Raise MeshError if the mesh has hanging nodes or a broken boundary.

        Uses the Euler characteristic of a simply connected polygon
        (V - E + T = 1, each hanging node lowers it by one) and requires the
        boundary to be a closed chain.
        """
        if self.n_vertices - self.n_edges + self.n_triangles != 1:
            raise MeshError("mesh is not conforming (Euler characteristic != 1)")
        deg = np.bincount(self.edges[self.boundary_edges].ravel(), minlength=self.n_vertices)
        if np.any(deg[self.boundary_vertices] != 2):
            raise MeshError("boundary edges do not form a closed chain")

    def is_conforming(self):
        try:
            self.check_conforming()
        except MeshError:
            return False
        return True

    def __repr__(self):
        return f"TriMesh(nv={self.n_vertices}, nt={self.n_triangles}, ne={self.n_edges})"


def _orient_longest(vertices, triangles):
    """Rotate triangles so local vertex 0 is opposite the longest edge.

    Ties go to the smallest opposite vertex id.
    """
    t = np.array(triangles, dtype=np.int64)
    p = np.asarray(vertices, dtype=float)
    for i, tri in enumerate(t):
        lengths = [np.linalg.norm(p[tri[(k + 1) % 3]] - p[tri[(k + 2) % 3]]) for k in range(3)]
        longest = max(lengths)
        cands = [k for k in range(3) if lengths[k] >= longest * (1.0 - 1e-12)]
        k = min(cands, key=lambda j: tri[j])
        t[i] = np.roll(tri, -k)
    return t


def _grid(x0, x1, y0, y1, nx, ny):
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            v10, v01, v11 = v00 + 1, v00 + nx + 1, v00 + nx + 2
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return pts, np.array(tris)


def _merge(parts):
    """Glue vertex/triangle blocks, identifying coincident vertices."""
    pts = np.vstack([p for p, _ in parts])
    offset = np.cumsum([0] + [len(p) for p, _ in parts[:-1]])
    tris = np.vstack([t + o for (_, t), o in zip(parts, offset)])
    keys = np.round(pts, 12)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    # keep first-seen ordering for determinism
    rank = np.argsort(np.argsort(first))
    inverse = rank[inverse.ravel()]
    new_pts = np.empty((len(first), 2))
    new_pts[inverse] = pts
    return new_pts, inverse[tris]


def build_initial_mesh(domain):
    """Coarse mesh of a Rectangle, Square or LShape domain."""
    if isinstance(domain, Rectangle):
        if not (domain.x1 > domain.x0 and domain.y1 > domain.y0):
            raise MeshError("degenerate rectangle")
        if domain.nx < 1 or domain.ny < 1:
            raise MeshError("need at least one cell per direction")
        pts, tris = _grid(domain.x0, domain.x1, domain.y0, domain.y1, domain.nx, domain.ny)
    elif isinstance(domain, Square):
        if domain.s <= 0:
            raise MeshError("degenerate square")
        return build_initial_mesh(Rectangle(-domain.s, domain.s, -domain.s, domain.s, 2 * domain.n, 2 * domain.n))
    elif isinstance(domain, LShape):
        s, n = domain.s, domain.n
        if s <= 0 or n < 1:
            raise MeshError("degenerate L-shape")
        pts, tris = _merge([
            _grid(-s, 0.0, -s, 0.0, n, n),
            _grid(-s, 0.0, 0.0, s, n, n),
            _grid(0.0, s, 0.0, s, n, n),
        ])
    else:
        raise TypeError(f"unsupported domain {domain!r}")
    return TriMesh(pts, _orient_longest(pts, tris))


def bisect(mesh, marked, return_parents=False):
    """Newest vertex bisection of the marked triangles with conforming closure.

    Returns the refined mesh, and if ``return_parents`` the parent id of every
    new triangle.
    """
    marked = np.unique(np.asarray(list(marked) if isinstance(marked, (set, frozenset)) else marked, dtype=np.int64))
    nt = mesh.n_triangles
    if marked.size and (marked.min() < 0 or marked.max() >= nt):
        raise IndexError("marked triangle id out of range")
    if marked.size == 0:
        return (mesh, np.arange(nt)) if return_parents else mesh

    te = mesh.tri_edges
    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    edge_marked[te[marked, 0]] = True
    # closure: any triangle with a marked edge must bisect its refinement edge
    stack = list(np.flatnonzero(edge_marked))
    while stack:
        e = stack.pop()
        for T in mesh.edge_tris[e]:
            if T >= 0 and not edge_marked[te[T, 0]]:
                edge_marked[te[T, 0]] = True
                stack.append(te[T, 0])

    split = np.flatnonzero(edge_marked)
    mids = 0.5 * (mesh.vertices[mesh.edges[split, 0]] + mesh.vertices[mesh.edges[split, 1]])
    midpoint = -np.ones(mesh.n_edges, dtype=np.int64)
    midpoint[split] = mesh.n_vertices + np.arange(len(split))
    vertices = np.vstack([mesh.vertices, mids])

    tris, parents = [], []

    def halve(tri, parent, e_left, e_right, depth):
        # tri = (p, a, b), refinement edge (a, b) already split at m
        p, a, b = tri
        m = depth
        for child, e in (((m, p, a), e_left), ((m, b, p), e_right)):
            if e is not None and midpoint[e] >= 0:
                q = midpoint[e]
                c0, c1, c2 = child
                # child refinement edge (c1, c2) split at q
                tris.append((q, c2, c0))
                tris.append((q, c0, c1))
                parents.extend((parent, parent))
            else:
                tris.append(child)
                parents.append(parent)

    for T in range(nt):
        tri = mesh.triangles[T]
        e0, e1, e2 = te[T]
        if not edge_marked[e0]:
            tris.append(tuple(tri))
            parents.append(T)
            continue
        # child (m, p, a) has refinement edge (p, a) = old edge 2;
        # child (m, b, p) has refinement edge (b, p) = old edge 1
        halve(tri, T, e2, e1, midpoint[e0])

    new = TriMesh(vertices, np.array(tris, dtype=np.int64))
    return (new, np.array(parents, dtype=np.int64)) if return_parents else new


def refine_uniform(mesh, times=1, return_parents=False):
    """Bisect every triangle ``times`` times (two NVB sweeps halve h)."""
    parents = np.arange(mesh.n_triangles)
    for _ in range(times):
        mesh, par = bisect(mesh, np.arange(mesh.n_triangles), return_parents=True)
        parents = parents[par]
    return (mesh, parents) if return_parents else mesh


def triangle_angles(mesh):
    """(nt, 3) interior angles, angle k at local vertex k."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.n_triangles, 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        out[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return out


def shape_regularity(mesh):
    """Minimum interior angle over all triangles, in radians."""
    return float(triangle_angles(mesh).min())

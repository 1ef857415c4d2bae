"""Incremental 3D Delaunay tetrahedralization and point location.

Construction is Bowyer-Watson insertion into a super-tetrahedron scaffold
that is stripped at the end. All sign decisions go through the exact
predicates, so the structure stays valid on degenerate inputs; ties
(cospherical points) are resolved deterministically because insertion
order is fixed to input order and only strict circumsphere conflicts are
retriangulated.

Point location is a visibility walk (optionally seeded by the previous
query) followed by a small flood over near-zero barycentric faces so that
queries on shared faces resolve to the lowest incident tetrahedron index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DuplicatePointError, NumericalError
from .predicates import insphere, orient3d, orient3d_det

OUTSIDE = -1

#: membership tolerance on normalized barycentric coordinates
EPS_BARY = 1e-9

#: duplicate-input tolerance in meters
DUPLICATE_TOL = 1e-9

# Side-of-face parity: for a positively oriented tetrahedron (v0, v1, v2, v3),
# parity[k] * orient3d(<other three in index order>, x) is positive when x
# lies on the interior side of the face opposite vertex k.
_FACE_PARITY = (-1, 1, -1, 1)
_FACE_SLOTS = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


@dataclass
class Tetrahedralization:
    """Vertices, tetrahedra (vertex index 4-tuples), face adjacency.

    ``neighbors[j][k]`` is the tetrahedron sharing the face opposite vertex
    slot ``k`` of tetrahedron ``j``, or -1 on the convex hull boundary.
    Every tetrahedron is positively oriented.
    """

    vertices: np.ndarray
    tetrahedra: np.ndarray
    neighbors: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.tetrahedra = np.asarray(self.tetrahedra, dtype=np.intp)
        self.neighbors = np.asarray(self.neighbors, dtype=np.intp)
        self._vtuples = [tuple(v) for v in self.vertices]

    def __len__(self) -> int:
        return len(self.tetrahedra)

    def tetra_volumes(self) -> np.ndarray:
        """Signed volume of every tetrahedron (positive by construction)."""
        v = self.vertices[self.tetrahedra]
        return np.linalg.det(v[:, 1:] - v[:, :1]) / 6.0

    def barycentric(self, tet: int, q) -> np.ndarray:
        """Normalized barycentric coordinates of q in tetrahedron ``tet``."""
        verts = [self._vtuples[i] for i in self.tetrahedra[tet]]
        qt = (float(q[0]), float(q[1]), float(q[2]))
        sides = np.empty(4)
        for k in range(4):
            f = _FACE_SLOTS[k]
            sides[k] = _FACE_PARITY[k] * orient3d_det(
                verts[f[0]], verts[f[1]], verts[f[2]], qt
            )
        total = sides.sum()
        if total <= 0:
            raise NumericalError(f"tetrahedron {tet} is not positively oriented")
        return sides / total

    def locate(self, q, start: int | None = None) -> int:
        """Tetrahedron containing q (tolerance EPS_BARY), or OUTSIDE.

        Points within tolerance of a shared face resolve to the lowest
        incident tetrahedron index; ``start`` seeds the walk (pass the
        previous result for spatially coherent query streams).
        """
        if len(self.tetrahedra) == 0:
            return OUTSIDE
        qt = (float(q[0]), float(q[1]), float(q[2]))
        current = start if start is not None and 0 <= start < len(self.tetrahedra) else 0
        max_steps = 4 * len(self.tetrahedra) + 16
        steps = 0
        while True:
            steps += 1
            if steps > max_steps:
                current = self._locate_scan(qt)
                break
            tet = self.tetrahedra[current]
            verts = [self._vtuples[i] for i in tet]
            moved = False
            for k in range(4):
                f = _FACE_SLOTS[k]
                side = _FACE_PARITY[k] * orient3d(verts[f[0]], verts[f[1]], verts[f[2]], qt)
                if side < 0:
                    nb = self.neighbors[current][k]
                    if nb == OUTSIDE:
                        moved = False  # hull plane separates q: outside hull
                        break
                    current = int(nb)
                    moved = True
                    break
            if not moved:
                break
        if current == OUTSIDE:
            return OUTSIDE
        return self._resolve_candidates(qt, current)

    def _locate_scan(self, qt) -> int:
        best, best_min = OUTSIDE, -math.inf
        for j in range(len(self.tetrahedra)):
            m = float(np.min(self.barycentric(j, qt)))
            if m > best_min:
                best, best_min = j, m
        return best

    def _resolve_candidates(self, qt, seed: int) -> int:
        """Flood over near-zero-bary faces; lowest qualifying index wins."""
        stack = [seed]
        visited = {seed}
        best = None
        while stack:
            j = stack.pop()
            bary = self.barycentric(j, qt)
            if bary.min() >= -EPS_BARY:
                if best is None or j < best:
                    best = j
            for k in range(4):
                if abs(bary[k]) <= EPS_BARY:
                    nb = int(self.neighbors[j][k])
                    if nb != OUTSIDE and nb not in visited:
                        visited.add(nb)
                        stack.append(nb)
        return OUTSIDE if best is None else best

    def boundary_faces(self):
        """Hull faces as (v0, v1, v2) index triples, outward orientation."""
        faces = []
        for j in range(len(self.tetrahedra)):
            tet = self.tetrahedra[j]
            for k in range(4):
                if self.neighbors[j][k] == OUTSIDE:
                    f = [int(tet[s]) for s in _FACE_SLOTS[k]]
                    # orient so the opposite vertex lies on the negative side
                    if _FACE_PARITY[k] > 0:
                        f[1], f[2] = f[2], f[1]
                    faces.append(tuple(f))
        return faces

    def validate(self) -> None:
        """Raise when structural or quality invariants are violated."""
        n_tet = len(self.tetrahedra)
        diag = float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))
        eps_vol = 1e-12 * diag**3
        vols = self.tetra_volumes()
        if n_tet and vols.min() <= eps_vol:
            raise DegenerateInputError(
                f"tetrahedron {int(vols.argmin())} is degenerate (volume {vols.min():.3e})"
            )
        used = np.unique(self.tetrahedra)
        if len(used) != len(self.vertices):
            raise NumericalError("not every input vertex appears in the triangulation")
        face_count: dict[frozenset, int] = {}
        for j in range(n_tet):
            tet = self.tetrahedra[j]
            for k in range(4):
                key = frozenset(int(tet[s]) for s in _FACE_SLOTS[k])
                face_count[key] = face_count.get(key, 0) + 1
                nb = int(self.neighbors[j][k])
                if nb != OUTSIDE:
                    nb_faces = [
                        frozenset(int(self.tetrahedra[nb][s]) for s in _FACE_SLOTS[m])
                        for m in range(4)
                    ]
                    if key not in nb_faces:
                        raise NumericalError(f"inconsistent adjacency at tetra {j} face {k}")
        for key, count in face_count.items():
            if count > 2:
                raise NumericalError(f"face {sorted(key)} shared by {count} tetrahedra")

    def to_off(self) -> str:
        """Debug export: every tetrahedron's four faces as an OFF text mesh."""
        lines = ["OFF", f"{len(self.vertices)} {4 * len(self.tetrahedra)} 0"]
        for v in self.vertices:
            lines.append(f"{v[0]!r} {v[1]!r} {v[2]!r}")
        for tet in self.tetrahedra:
            for f in _FACE_SLOTS:
                lines.append(f"3 {tet[f[0]]} {tet[f[1]]} {tet[f[2]]}")
        return "\n".join(lines) + "\n"


def locate(t: Tetrahedralization, q, start: int | None = None) -> int:
    """Module-level convenience wrapper around :meth:`Tetrahedralization.locate`."""
    return t.locate(q, start)


def _check_duplicates(points: np.ndarray) -> None:
    cells: dict[tuple[int, int, int], list[int]] = {}
    inv = 1.0 / DUPLICATE_TOL
    for i, p in enumerate(points):
        cx = math.floor(p[0] * inv)
        cy = math.floor(p[1] * inv)
        cz = math.floor(p[2] * inv)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for j in cells.get((cx + dx, cy + dy, cz + dz), ()):
                        d = points[i] - points[j]
                        if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= DUPLICATE_TOL**2:
                            raise DuplicatePointError(j, i, DUPLICATE_TOL)
        cells.setdefault((cx, cy, cz), []).append(i)


class _Arena:
    """Mutable tetrahedron soup used during construction."""

    __slots__ = ("verts", "tets", "adj", "alive")

    def __init__(self, verts):
        self.verts = verts
        self.tets: list[tuple[int, int, int, int]] = []
        self.adj: list[list[int]] = []
        self.alive: list[bool] = []

    def add(self, tet, neighbors) -> int:
        self.tets.append(tet)
        self.adj.append(neighbors)
        self.alive.append(True)
        return len(self.tets) - 1

    def side(self, j: int, k: int, q) -> int:
        tet = self.tets[j]
        f = _FACE_SLOTS[k]
        return _FACE_PARITY[k] * orient3d(
            self.verts[tet[f[0]]], self.verts[tet[f[1]]], self.verts[tet[f[2]]], q
        )

    def in_conflict(self, j: int, q) -> bool:
        a, b, c, d = (self.verts[v] for v in self.tets[j])
        return insphere(a, b, c, d, q) > 0


def _walk(arena: _Arena, q, seed: int) -> int:
    """Visibility walk to a tetrahedron containing q (closed sense)."""
    current = seed
    max_steps = 4 * len(arena.tets) + 16
    for _ in range(max_steps):
        moved = False
        for k in range(4):
            if arena.side(current, k, q) < 0:
                nb = arena.adj[current][k]
                if nb >= 0:
                    current = nb
                    moved = True
                    break
        if not moved:
            return current
    # Degenerate walk cycle: fall back to scanning for any conflicting tet.
    for j in range(len(arena.tets)):
        if arena.alive[j] and arena.in_conflict(j, q):
            return j
    raise NumericalError("point location failed during triangulation")


def _insert(arena: _Arena, point_index: int, seed: int) -> int:
    q = arena.verts[point_index]
    t0 = _walk(arena, q, seed)

    conflict: dict[int, bool] = {}

    def is_conflict(j: int) -> bool:
        hit = conflict.get(j)
        if hit is None:
            hit = arena.in_conflict(j, q)
            conflict[j] = hit
        return hit

    if not is_conflict(t0):
        raise NumericalError("walk ended outside the conflict region")
    cavity = {t0}
    stack = [t0]
    boundary = []  # (face vertex triple, outside tet index or -1)
    while stack:
        j = stack.pop()
        tet = arena.tets[j]
        for k in range(4):
            nb = arena.adj[j][k]
            face = tuple(tet[s] for s in _FACE_SLOTS[k])
            if nb == -1:
                boundary.append((face, -1))
            elif nb in cavity:
                continue
            elif is_conflict(nb):
                cavity.add(nb)
                stack.append(nb)
            else:
                boundary.append((face, nb))
    for j in cavity:
        arena.alive[j] = False

    edge_map: dict[frozenset, tuple[int, int]] = {}
    last = -1
    for face, outside in boundary:
        f0, f1, f2 = face
        if orient3d(arena.verts[f0], arena.verts[f1], arena.verts[f2], q) < 0:
            f1, f2 = f2, f1
        new = arena.add((f0, f1, f2, point_index), [-1, -1, -1, -1])
        # face opposite slot 3 is (f0, f1, f2): wire to the outside tet
        arena.adj[new][3] = outside
        if outside >= 0:
            target = frozenset((f0, f1, f2))
            out_tet = arena.tets[outside]
            for m in range(4):
                if frozenset(out_tet[s] for s in _FACE_SLOTS[m]) == target:
                    arena.adj[outside][m] = new
                    break
        # internal faces contain the new point plus one boundary-face edge
        for slot, edge in ((0, (f1, f2)), (1, (f0, f2)), (2, (f0, f1))):
            key = frozenset(edge)
            other = edge_map.pop(key, None)
            if other is None:
                edge_map[key] = (new, slot)
            else:
                arena.adj[new][slot] = other[0]
                arena.adj[other[0]][other[1]] = new
        last = new
    if edge_map:
        raise NumericalError("cavity boundary was not watertight")
    return last


def tetrahedralize(points) -> Tetrahedralization:
    """Delaunay tetrahedralization of >= 4 non-coplanar distinct points.

    The vertex set of the result is exactly the input (no Steiner points)
    and the output is deterministic for identical input: points are
    inserted in input order and ties are broken by the strict-conflict
    rule, so reruns reproduce the same tetrahedra list.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegenerateInputError("points must be an (n, 3) array")
    n = len(pts)
    if n < 4:
        raise DegenerateInputError(f"need at least 4 points, got {n}")
    if not np.all(np.isfinite(pts)):
        raise DegenerateInputError("points must be finite")
    _check_duplicates(pts)

    center = pts.mean(axis=0)
    radius = float(np.max(np.linalg.norm(pts - center, axis=1)))
    # The scaffold must clear every circumsphere of the final triangulation,
    # or hull-adjacent slivers get eaten; 1e16 x data radius leaves only
    # sub-ulp-flat configurations exposed, which exact orientation already
    # rejects as degenerate.
    span = 1e16 * max(radius, 1e-3)
    super_pts = np.array(
        [
            center + span * np.array([1.0, 1.0, 1.0]),
            center + span * np.array([1.0, -1.0, -1.0]),
            center + span * np.array([-1.0, 1.0, -1.0]),
            center + span * np.array([-1.0, -1.0, 1.0]),
        ]
    )
    verts = [tuple(map(float, p)) for p in pts] + [tuple(map(float, p)) for p in super_pts]
    arena = _Arena(verts)
    s0, s1, s2, s3 = n, n + 1, n + 2, n + 3
    if orient3d(verts[s0], verts[s1], verts[s2], verts[s3]) < 0:
        s2, s3 = s3, s2
    arena.add((s0, s1, s2, s3), [-1, -1, -1, -1])

    seed = 0
    for i in range(n):
        seed = _insert(arena, i, seed)

    keep = [
        j
        for j in range(len(arena.tets))
        if arena.alive[j] and all(v < n for v in arena.tets[j])
    ]
    if not keep:
        raise DegenerateInputError("all points are coplanar")
    remap = {old: new for new, old in enumerate(keep)}
    tetra = np.array([arena.tets[j] for j in keep], dtype=np.intp)
    neighbors = np.array(
        [[remap.get(nb, -1) for nb in arena.adj[j]] for j in keep], dtype=np.intp
    )
    result = Tetrahedralization(pts.copy(), tetra, neighbors)
    if len(np.unique(tetra)) != n:
        raise NumericalError("triangulation lost input vertices")
    return result

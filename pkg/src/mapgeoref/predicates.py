"""Orientation and circumsphere predicates with exact sign decisions.

Each predicate first evaluates the determinant in plain floating point with
a conservative forward error bound; only when the magnitude falls inside
the bound does it re-evaluate in exact rational arithmetic. Sign decisions
are therefore always exact, which keeps the incremental triangulation
valid on degenerate inputs (cospherical cuboid corners, near-coplanar
trajectory points).

Conventions (verified by the unit tests):
  - ``orient3d(a, b, c, d)``: sign of det[b-a; c-a; d-a]. Positive means d
    lies on the side of plane (a, b, c) toward which (a, b, c) winds
    counterclockwise; a tetrahedron listed in positive orientation has
    positive signed volume.
  - ``insphere(a, b, c, d, e)``: +1 when e lies strictly inside the
    circumsphere of the positively oriented tetrahedron (a, b, c, d),
    -1 when strictly outside, 0 when cospherical.
"""

from __future__ import annotations

import math
from fractions import Fraction

_ORIENT3D_COEFF = 1e-14
_INSPHERE_COEFF = 1e-13


def orient3d_det(a, b, c, d) -> float:
    """Raw float determinant det[b-a; c-a; d-a] (6x the signed volume)."""
    bax = b[0] - a[0]
    bay = b[1] - a[1]
    baz = b[2] - a[2]
    cax = c[0] - a[0]
    cay = c[1] - a[1]
    caz = c[2] - a[2]
    dax = d[0] - a[0]
    day = d[1] - a[1]
    daz = d[2] - a[2]
    return (
        bax * (cay * daz - caz * day)
        - bay * (cax * daz - caz * dax)
        + baz * (cax * day - cay * dax)
    )


def _orient3d_exact(a, b, c, d) -> int:
    ax, ay, az = Fraction(a[0]), Fraction(a[1]), Fraction(a[2])
    bax = Fraction(b[0]) - ax
    bay = Fraction(b[1]) - ay
    baz = Fraction(b[2]) - az
    cax = Fraction(c[0]) - ax
    cay = Fraction(c[1]) - ay
    caz = Fraction(c[2]) - az
    dax = Fraction(d[0]) - ax
    day = Fraction(d[1]) - ay
    daz = Fraction(d[2]) - az
    det = (
        bax * (cay * daz - caz * day)
        - bay * (cax * daz - caz * dax)
        + baz * (cax * day - cay * dax)
    )
    return (det > 0) - (det < 0)


def orient3d(a, b, c, d) -> int:
    """Exact sign of the orientation determinant."""
    bax = b[0] - a[0]
    bay = b[1] - a[1]
    baz = b[2] - a[2]
    cax = c[0] - a[0]
    cay = c[1] - a[1]
    caz = c[2] - a[2]
    dax = d[0] - a[0]
    day = d[1] - a[1]
    daz = d[2] - a[2]
    det = (
        bax * (cay * daz - caz * day)
        - bay * (cax * daz - caz * dax)
        + baz * (cax * day - cay * dax)
    )
    permanent = (
        abs(bax) * (abs(cay * daz) + abs(caz * day))
        + abs(bay) * (abs(cax * daz) + abs(caz * dax))
        + abs(baz) * (abs(cax * day) + abs(cay * dax))
    )
    bound = _ORIENT3D_COEFF * permanent
    if math.isfinite(det) and (det > bound or -det > bound):
        return 1 if det > 0 else -1
    return _orient3d_exact(a, b, c, d)


def _insphere_terms(a, b, c, d, e, num):
    """Shared expansion: translated coordinates, lifts, 3x3 minors.

    ``num`` converts a coordinate; float for the filtered path, Fraction
    for the exact one.
    """
    ex, ey, ez = num(e[0]), num(e[1]), num(e[2])
    rows = []
    for p in (a, b, c, d):
        px = num(p[0]) - ex
        py = num(p[1]) - ey
        pz = num(p[2]) - ez
        rows.append((px, py, pz, px * px + py * py + pz * pz))
    return rows


def _det3(u, v, w):
    return (
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )


def _perm3(u, v, w) -> float:
    return (
        abs(u[0]) * (abs(v[1] * w[2]) + abs(v[2] * w[1]))
        + abs(u[1]) * (abs(v[0] * w[2]) + abs(v[2] * w[0]))
        + abs(u[2]) * (abs(v[0] * w[1]) + abs(v[1] * w[0]))
    )


def _insphere_exact(a, b, c, d, e) -> int:
    ra, rb, rc, rd = _insphere_terms(a, b, c, d, e, Fraction)
    det4 = (
        -ra[3] * _det3(rb, rc, rd)
        + rb[3] * _det3(ra, rc, rd)
        - rc[3] * _det3(ra, rb, rd)
        + rd[3] * _det3(ra, rb, rc)
    )
    # det4 < 0 means e strictly inside for a positively oriented (a,b,c,d)
    return (det4 < 0) - (det4 > 0)


def insphere(a, b, c, d, e) -> int:
    """+1 if e is strictly inside the circumsphere of positive (a,b,c,d)."""
    ra, rb, rc, rd = _insphere_terms(a, b, c, d, e, float)
    det4 = (
        -ra[3] * _det3(rb, rc, rd)
        + rb[3] * _det3(ra, rc, rd)
        - rc[3] * _det3(ra, rb, rd)
        + rd[3] * _det3(ra, rb, rc)
    )
    permanent = (
        ra[3] * _perm3(rb, rc, rd)
        + rb[3] * _perm3(ra, rc, rd)
        + rc[3] * _perm3(ra, rb, rd)
        + rd[3] * _perm3(ra, rb, rc)
    )
    bound = _INSPHERE_COEFF * permanent
    if math.isfinite(det4) and (det4 > bound or -det4 > bound):
        return -1 if det4 > 0 else 1
    return _insphere_exact(a, b, c, d, e)

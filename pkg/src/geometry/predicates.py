"""
Orientation and insphere signs for 3-D points.

Both tests evaluate the determinant in floating point together with a
bound on its rounding error; rows whose value does not clear the bound are
re-evaluated exactly on rational numbers.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_EPS = np.finfo(np.float64).eps / 2.0
O3D_ERRBOUND = (7.0 + 56.0 * _EPS) * _EPS
ISP_ERRBOUND = (16.0 + 224.0 * _EPS) * _EPS


def _orient_terms(a, b, c, d):
    bax, bay, baz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    cax, cay, caz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    dax, day, daz = d[0] - a[0], d[1] - a[1], d[2] - a[2]
    det = (bax * (cay * daz - caz * day)
           - bay * (cax * daz - caz * dax)
           + baz * (cax * day - cay * dax))
    return det, (bax, bay, baz, cax, cay, caz, dax, day, daz)


def _insphere_det(a, b, c, d, e):
    aex, aey, aez = a[0] - e[0], a[1] - e[1], a[2] - e[2]
    bex, bey, bez = b[0] - e[0], b[1] - e[1], b[2] - e[2]
    cex, cey, cez = c[0] - e[0], c[1] - e[1], c[2] - e[2]
    dex, dey, dez = d[0] - e[0], d[1] - e[1], d[2] - e[2]

    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey

    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da

    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez
    return (dlift * abc - clift * dab) + (blift * cda - alift * bcd)


def _insphere_permanent(a, b, c, d, e):
    ae, be, ce, de = (np.abs(p - e) for p in (a, b, c, d))

    def pair(p, q):
        return p[0] * q[1] + q[0] * p[1]

    ab, bc, cd, da, ac, bd = pair(ae, be), pair(be, ce), pair(ce, de), pair(de, ae), pair(ae, ce), pair(be, de)
    abc = ae[2] * bc + be[2] * ac + ce[2] * ab
    bcd = be[2] * cd + ce[2] * bd + de[2] * bc
    cda = ce[2] * da + de[2] * ac + ae[2] * cd
    dab = de[2] * ab + ae[2] * bd + be[2] * da
    lift = [p[0] * p[0] + p[1] * p[1] + p[2] * p[2] for p in (ae, be, ce, de)]
    return lift[3] * abc + lift[2] * dab + lift[1] * cda + lift[0] * bcd


def _exact(values) -> list:
    return [Fraction(float(v)) for v in values]


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def orient3d(a, b, c, d) -> np.ndarray:
    """
    Sign of det[b-a, c-a, d-a] for stacked points of shape (..., 3).
    Positive when (a, b, c, d) is a positively oriented tetrahedron.
    """
    a, b, c, d = (np.asarray(p, dtype=np.float64) for p in (a, b, c, d))
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    det, t = _orient_terms(a.T, b.T, c.T, d.T)
    bax, bay, baz, cax, cay, caz, dax, day, daz = (np.abs(x) for x in t)
    permanent = (bax * (cay * daz + caz * day)
                 + bay * (cax * daz + caz * dax)
                 + baz * (cax * day + cay * dax))
    det = np.asarray(det).T
    signs = np.sign(det).astype(np.int8)
    unsure = np.abs(det) <= O3D_ERRBOUND * np.asarray(permanent).T
    if np.any(unsure):
        flat_a, flat_b = a.reshape(-1, 3), b.reshape(-1, 3)
        flat_c, flat_d = c.reshape(-1, 3), d.reshape(-1, 3)
        flat_signs = signs.reshape(-1)
        for i in np.flatnonzero(unsure.reshape(-1)):
            exact_det, _ = _orient_terms(_exact(flat_a[i]), _exact(flat_b[i]),
                                         _exact(flat_c[i]), _exact(flat_d[i]))
            flat_signs[i] = _sign(exact_det)
        signs = flat_signs.reshape(signs.shape)
    return signs


def insphere(a, b, c, d, e) -> np.ndarray:
    """
    Positive when e lies strictly inside the circumsphere of the positively
    oriented tetrahedron (a, b, c, d), zero when cospherical.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in (a, b, c, d, e)]
    a, b, c, d, e = np.broadcast_arrays(*pts)
    det = np.asarray(_insphere_det(a.T, b.T, c.T, d.T, e.T)).T
    permanent = np.asarray(_insphere_permanent(a.T, b.T, c.T, d.T, e.T)).T
    # the determinant is negative for inside points under this orientation
    signs = (-np.sign(det)).astype(np.int8)
    unsure = np.abs(det) <= ISP_ERRBOUND * permanent
    if np.any(unsure):
        flats = [p.reshape(-1, 3) for p in (a, b, c, d, e)]
        flat_signs = signs.reshape(-1)
        for i in np.flatnonzero(unsure.reshape(-1)):
            flat_signs[i] = -_sign(_insphere_det(*(_exact(p[i]) for p in flats)))
        signs = flat_signs.reshape(signs.shape)
    return signs

"""The compactified two-sheeted curve y^2 = prod_m (z - E_m).

Sheets are labelled by their behaviour at infinity: on sheet ``s`` one has
``y / z**(p+1) -> -s``, so ``P_inf+`` lies on sheet +1.  On the cut plane
(the z-plane minus the straight cuts joining paired branch points) the
sheet-(+1) branch has the closed form

    y_plus(z) = - prod_j (z - a_j) * sqrt((z - b_j) / (z - a_j))

with the principal square root; each factor is analytic off the segment
``[a_j, b_j]`` and behaves like ``z`` at infinity.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import AtBranchPoint, DuplicateBranchPoint, OddCount, ZeroBranchPoint

DISTINCT_TOL = 1e-12


def lex_key(z):
    z = complex(z)
    return (z.real, z.imag)


@dataclass(frozen=True)
class CurveSpec:
    """Validated curve data.

    ``branch_points`` are stored in lexicographic (Re, Im) order, so
    ``branch_points[0]`` is the base point ``Q0``.  ``pairs`` lists the cut
    endpoints as index pairs into ``branch_points``.
    """

    branch_points: tuple
    genus: int
    g_sign: int
    g_top: complex
    pairs: tuple = field(default=())

    @property
    def scale(self):
        return max(abs(e) for e in self.branch_points)

    @property
    def base_point(self):
        return self.branch_points[0]

    def R(self, z):
        """Evaluate R_{2p+2}(z) = prod (z - E_m)."""
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for e in self.branch_points:
            out = out * (z - e)
        return out

    def R_coefficients(self):
        """Ascending coefficients of R (monic, degree 2p+2)."""
        return np.polynomial.polynomial.polyfromroots(self.branch_points)

    def cut_endpoints(self):
        return [(self.branch_points[i], self.branch_points[j]) for i, j in self.pairs]


def default_pairing(n):
    return tuple((2 * k, 2 * k + 1) for k in range(n // 2))


def validate_spec(branch_points, g_sign=1, pairing=None):
    """Build a :class:`CurveSpec` from raw branch points.

    Parameters
    ----------
    branch_points : sequence of complex
        The 2p+2 branch points, any order.
    g_sign : {+1, -1}
        Selects ``g_{p+1} = g_sign * sqrt(prod E_m)`` (principal root).
    pairing : sequence of (complex, complex), optional
        Cut endpoints given by value; default pairs consecutive points after
        lexicographic sorting.  Geometric validity is checked by
        :func:`sblattice.contour.build_cuts`.
    """
    pts = [complex(e) for e in branch_points]
    if len(pts) < 2 or len(pts) % 2:
        raise OddCount(f"need an even number >= 2 of branch points, got {len(pts)}")
    if g_sign not in (1, -1):
        raise ValueError("g_sign must be +1 or -1")
    scale = max(abs(e) for e in pts)
    for e in pts:
        if abs(e) <= DISTINCT_TOL * max(scale, 1.0):
            raise ZeroBranchPoint("branch point at z = 0 is not allowed", point=e)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) <= DISTINCT_TOL * max(scale, 1.0):
                raise DuplicateBranchPoint(
                    f"branch points {pts[i]} and {pts[j]} coincide", pair=(pts[i], pts[j])
                )
    pts.sort(key=lex_key)
    if pairing is None:
        pairs = default_pairing(len(pts))
    else:
        pairs = tuple(tuple(_index_of(pts, e) for e in pair) for pair in pairing)
        used = sorted(i for pr in pairs for i in pr)
        if used != list(range(len(pts))):
            raise ValueError("pairing must be a perfect matching of the branch points")
        # the cut containing Q0 comes first, Q0 at its start
        pairs = sorted((tuple(sorted(pr)) for pr in pairs), key=lambda pr: pr[0])
        pairs = tuple(pairs)
    prod = complex(np.prod(np.array(pts, dtype=complex)))
    g_top = g_sign * cmath.sqrt(prod)
    return CurveSpec(tuple(pts), len(pts) // 2 - 1, g_sign, g_top, pairs)


def _index_of(pts, e):
    e = complex(e)
    dists = [abs(p - e) for p in pts]
    k = int(np.argmin(dists))
    if dists[k] > 1e-9 * max(1.0, abs(e)):
        raise ValueError(f"pairing endpoint {e} is not a branch point")
    return k


def y_plus(spec, z, offsets=None):
    """Sheet-(+1) value of y on the cut plane; vectorised over ``z``.

    ``offsets`` optionally maps a branch point ``E`` to precomputed values of
    ``z - E``; near a branch point this avoids the cancellation in forming the
    difference from a rounded ``z``.
    """
    z = np.asarray(z, dtype=complex)
    offsets = offsets or {}
    out = -np.ones_like(z)
    for a, b in spec.cut_endpoints():
        da = offsets.get(a)
        db = offsets.get(b)
        da = z - a if da is None else da
        db = z - b if db is None else db
        out = out * da * np.sqrt(db / da)
    return out


def y_on_sheet(spec, z, sheet):
    """Value of y at ``(z, sheet)``.

    Raises :class:`AtBranchPoint` when ``z`` coincides with a branch point,
    where the sheet label is meaningless.
    """
    z = complex(z)
    tol = 1e-14 * max(1.0, spec.scale)
    for e in spec.branch_points:
        if abs(z - e) <= tol:
            raise AtBranchPoint(f"z = {z} is a branch point")
    return sheet * complex(y_plus(spec, z))


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the compactified curve.

    ``infinite`` marks ``P_inf+-`` (then ``z`` and ``y`` are ``inf``); branch
    points carry ``sheet=+1`` and ``y=0`` by convention.
    """

    z: complex
    sheet: int
    y: complex
    infinite: bool = False
    branch: bool = False

    def __repr__(self):
        if self.infinite:
            return f"P_inf{'+' if self.sheet > 0 else '-'}"
        return f"SurfacePoint(z={self.z:.6g}, sheet={self.sheet:+d}, y={self.y:.6g})"


def point(spec, z, sheet):
    z = complex(z)
    for e in spec.branch_points:
        if abs(z - e) <= 1e-14 * max(1.0, spec.scale):
            return SurfacePoint(e, 1, 0j, branch=True)
    return SurfacePoint(z, int(sheet), y_on_sheet(spec, z, sheet))


def point_from_y(spec, z, y, rel_tol=1e-6):
    """Lift ``(z, y)`` to a surface point by matching ``y`` against both sheets."""
    z = complex(z)
    y = complex(y)
    for e in spec.branch_points:
        if abs(z - e) <= 1e-14 * max(1.0, spec.scale):
            return SurfacePoint(e, 1, 0j, branch=True)
    yp = complex(y_plus(spec, z))
    d_plus, d_minus = abs(y - yp), abs(y + yp)
    if min(d_plus, d_minus) > rel_tol * max(abs(yp), 1e-300):
        raise ValueError(f"(z={z}, y={y}) is not on the curve (|y_+| = {abs(yp)})")
    sheet = 1 if d_plus <= d_minus else -1
    return SurfacePoint(z, sheet, sheet * yp)


def branch_point(spec, m):
    return SurfacePoint(spec.branch_points[m], 1, 0j, branch=True)


def infinity(sheet):
    return SurfacePoint(complex("inf"), int(sheet), complex("inf"), infinite=True)


def p_zero(spec, sign):
    """The point ``P_{0,sign} = (0, sign * g_{p+1})``."""
    return point_from_y(spec, 0.0, sign * spec.g_top)


def involute(P):
    """Sheet exchange ``(z, y) -> (z, -y)``; fixes branch points."""
    if P.branch:
        return P
    if P.infinite:
        return infinity(-P.sheet)
    return SurfacePoint(P.z, -P.sheet, -P.y)


def curve_residual(spec, P):
    """|y^2 - R(z)| / (1 + |R(z)|) for a finite point."""
    if P.infinite:
        return 0.0
    r = complex(spec.R(P.z))
    return abs(P.y * P.y - r) / (1.0 + abs(r))


@dataclass(frozen=True)
class Divisor:
    """Nonnegative divisor stored as a flat tuple of points (repeats = multiplicity)."""

    points: tuple = ()

    @property
    def degree(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

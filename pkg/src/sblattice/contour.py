"""Paths on the cut plane, quadrature of differentials, homology basis.

A path is a tuple of segments, each tagged with the sheet it lives on.  Because
no registered path crosses a cut, ``y`` along a segment is simply
``sheet * y_plus(z)``; :func:`continue_y` re-derives the same values by
step-wise continuation and is used to check that claim.

Segments are parametrised over ``s in [0, 1]``.  Endpoints sitting on a branch
point use ``t = s**2`` (or ``sin(pi s / 2)**2`` when both ends do), which turns
the ``1/sqrt`` behaviour of ``dz / y`` into a smooth integrand.  The final
segment of a path to ``z = 0`` or to infinity may subtract ``c * dlog(zeta)``
so that a simple pole at the end is integrated in regularised form.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace

import numpy as np

from .curve import y_plus
from .errors import (
    IntersectingCuts,
    NoPathFound,
    PoleOnPath,
    ToleranceNotReached,
    TooCloseToBranchPoint,
)

DEFAULT_TOL = 1e-12

# --------------------------------------------------------------------------
# cuts


def _seg_dist_point(a, b, p):
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


def _cross(u, v):
    return (u.conjugate() * v).imag


def segments_intersect(a, b, c, d, tol=0.0):
    """True when closed segments [a,b] and [c,d] meet or come within ``tol``."""
    d1 = _cross(b - a, c - a)
    d2 = _cross(b - a, d - a)
    d3 = _cross(d - c, a - c)
    d4 = _cross(d - c, b - c)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    return (
        min(
            _seg_dist_point(c, d, a),
            _seg_dist_point(c, d, b),
            _seg_dist_point(a, b, c),
            _seg_dist_point(a, b, d),
        )
        <= tol
    )


def seg_seg_dist(a, b, c, d):
    if segments_intersect(a, b, c, d):
        return 0.0
    return min(
        _seg_dist_point(c, d, a),
        _seg_dist_point(c, d, b),
        _seg_dist_point(a, b, c),
        _seg_dist_point(a, b, d),
    )


def build_cuts(spec):
    """Return the cut segments ``[(a, b), ...]`` of ``spec``.

    Raises :class:`IntersectingCuts` if two cuts meet (including collinear
    overlap).
    """
    cuts = spec.cut_endpoints()
    for i in range(len(cuts)):
        for j in range(i + 1, len(cuts)):
            if segments_intersect(*cuts[i], *cuts[j]):
                raise IntersectingCuts(
                    f"cuts {cuts[i]} and {cuts[j]} intersect", cuts=(cuts[i], cuts[j])
                )
    return cuts


# --------------------------------------------------------------------------
# segments


@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex
    sheet: int = 1
    sing_start: bool = False
    sing_end: bool = False
    # local coordinate of the end point used for log-regularisation: "z", "inv" or None
    log_end: str | None = None

    def nodes(self, s):
        d = self.z1 - self.z0
        if self.sing_start and self.sing_end:
            t = np.sin(0.5 * np.pi * s) ** 2
            dt = 0.5 * np.pi * np.sin(np.pi * s)
        elif self.sing_start:
            t, dt = s * s, 2 * s
        elif self.sing_end:
            t, dt = 1 - (1 - s) ** 2, 2 * (1 - s)
        else:
            t, dt = s, np.ones_like(s)
        return self.z0 + d * t, d * dt

    def offsets(self, s):
        """Exact ``z - z0`` and ``z - z1`` at the parameters ``s``."""
        d = self.z1 - self.z0
        if self.sing_start and self.sing_end:
            t = np.sin(0.5 * np.pi * s) ** 2
            u = np.cos(0.5 * np.pi * s) ** 2
        elif self.sing_start:
            t = s * s
            u = 1 - t
        elif self.sing_end:
            u = (1 - s) ** 2
            t = 1 - u
        else:
            t, u = s, 1 - s
        return d * t, -d * u

    def reversed(self):
        return replace(self, z0=self.z1, z1=self.z0, sing_start=self.sing_end,
                       sing_end=self.sing_start, log_end=None)

    @property
    def start(self):
        return self.z0

    @property
    def end(self):
        return self.z1


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    theta0: float
    theta1: float
    sheet: int = 1
    log_end: str | None = None

    def nodes(self, s):
        th = self.theta0 + (self.theta1 - self.theta0) * s
        e = np.exp(1j * th)
        return self.center + self.radius * e, 1j * self.radius * e * (self.theta1 - self.theta0)

    def reversed(self):
        return replace(self, theta0=self.theta1, theta1=self.theta0)

    @property
    def start(self):
        return self.center + self.radius * np.exp(1j * self.theta0)

    @property
    def end(self):
        return self.center + self.radius * np.exp(1j * self.theta1)


@dataclass(frozen=True)
class Ray:
    """Radial ray from ``z0`` to infinity, parametrised by ``zeta = (1-s)/z0``."""

    z0: complex
    sheet: int = 1
    log_end: str | None = "inv"

    def nodes(self, s):
        z = self.z0 / (1 - s)
        return z, self.z0 / (1 - s) ** 2

    @property
    def start(self):
        return self.z0

    @property
    def end(self):
        return complex("inf")


@dataclass(frozen=True)
class Path:
    """Ordered segments; ``continuation_record`` is filled by :func:`continue_y`."""

    segments: tuple
    label: str = ""

    @property
    def start(self):
        return self.segments[0].start

    @property
    def end(self):
        return self.segments[-1].end

    def reversed(self):
        return Path(tuple(seg.reversed() for seg in reversed(self.segments)), self.label)

    def __add__(self, other):
        return Path(self.segments + other.segments, self.label)


# --------------------------------------------------------------------------
# continuation


def continue_y(spec, path, y_start, n_min=64):
    """Continue ``y`` analytically along ``path`` starting from ``y_start``.

    Nodes are refined until ``arg R(z)`` changes by less than pi/4 per step;
    at each node the root of ``y^2 = R`` closest to the previous value is
    taken.  Returns ``(z_nodes, y_nodes)``.
    """
    scale = max(1.0, spec.scale)
    eps_bp = 1e-9 * scale
    zs_all, ys_all = [], []
    y_prev = complex(y_start)
    for seg in path.segments:
        if isinstance(seg, Ray):
            raise ValueError("continuation to infinity is not supported")
        n = n_min
        while True:
            s = np.linspace(0.0, 1.0, n + 1)
            z, _ = seg.nodes(s)
            r = spec.R(z)
            dang = np.abs(np.angle(r[1:] / r[:-1]))
            if np.all(dang < np.pi / 4) or n > 2**20:
                break
            n *= 2
        dmin = min(np.min(np.abs(z - e)) for e in spec.branch_points)
        if dmin < eps_bp and not (getattr(seg, "sing_start", False) or getattr(seg, "sing_end", False)):
            raise TooCloseToBranchPoint(f"path passes within {dmin:.3g} of a branch point")
        root = np.sqrt(r)
        ys = np.empty_like(root)
        for k in range(len(z)):
            c = root[k]
            ys[k] = c if abs(c - y_prev) <= abs(c + y_prev) else -c
            y_prev = ys[k]
        zs_all.append(z)
        ys_all.append(ys)
    return np.concatenate(zs_all), np.concatenate(ys_all)


# --------------------------------------------------------------------------
# quadrature

_GL_LO = np.polynomial.legendre.leggauss(10)
_GL_HI = np.polynomial.legendre.leggauss(21)


def _panel(func, a, b):
    """Gauss-Legendre 10/21 pair on the panels [a_k, b_k] (vectorised)."""
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    x_hi = mid + half * _GL_HI[0][None, :]
    x_lo = mid + half * _GL_LO[0][None, :]
    s = np.concatenate([x_hi.ravel(), x_lo.ravel()])
    vals = func(s)  # (k, len(s))
    m = len(a)
    v_hi = vals[:, : m * 21].reshape(vals.shape[0], m, 21)
    v_lo = vals[:, m * 21:].reshape(vals.shape[0], m, 10)
    i_hi = np.einsum("kmj,j->km", v_hi, _GL_HI[1]) * half[:, 0]
    i_lo = np.einsum("kmj,j->km", v_lo, _GL_LO[1]) * half[:, 0]
    return i_hi, np.max(np.abs(i_hi - i_lo), axis=0)


def adaptive_quad(func, tol=DEFAULT_TOL, max_panels=20000, initial=4):
    """Integrate a vector-valued ``func(s) -> (k, n)`` over ``s in [0, 1]``.

    Panels whose Gauss 10/21 discrepancy exceeds their share of ``tol`` are
    bisected.  Accepted panels are summed in left-to-right order so the result
    does not depend on the refinement history.  Returns ``(values, error)``.
    """
    edges_a = np.linspace(0.0, 1.0, initial + 1)[:-1]
    edges_b = np.linspace(0.0, 1.0, initial + 1)[1:]
    done_a, done_val, done_err = [], [], []
    n_panels = 0
    scale = None
    while len(edges_a):
        vals, err = _panel(func, edges_a, edges_b)
        if not np.all(np.isfinite(vals)):
            raise PoleOnPath("non-finite integrand on path")
        width = edges_b - edges_a
        if scale is None:
            # absolute tolerance for O(1) results, relative for large ones
            scale = max(1.0, float(np.max(np.abs(vals.sum(axis=1)))))
        ok = (err <= tol * np.maximum(width, 1e-6) * scale) | (width < 1e-12)
        for k in np.nonzero(ok)[0]:
            done_a.append(edges_a[k])
            done_val.append(vals[:, k])
            done_err.append(err[k])
        bad = np.nonzero(~ok)[0]
        n_panels += len(edges_a)
        if n_panels > max_panels:
            raise ToleranceNotReached(f"adaptive quadrature exceeded {max_panels} panels")
        mids = 0.5 * (edges_a[bad] + edges_b[bad])
        edges_a, edges_b = (
            np.concatenate([edges_a[bad], mids]),
            np.concatenate([mids, edges_b[bad]]),
        )
    order = np.argsort(done_a, kind="stable")
    vals = np.array(done_val)[order]
    # compensated summation in panel order
    total = np.zeros(vals.shape[1], dtype=complex)
    comp = np.zeros_like(total)
    for v in vals:
        yk = v - comp
        t = total + yk
        comp = (t - total) - yk
        total = t
    total_err = float(np.sum(done_err))
    return total, total_err


def integrate_segment(spec, seg, integrand, tol=DEFAULT_TOL, log_coef=None):
    """Integrate ``integrand(z, y) -> (k, n)`` times dz along one segment.

    ``log_coef`` (length-k array) subtracts ``log_coef * dlog(zeta)`` where
    ``zeta`` is the segment's end coordinate (``z`` or ``1/z``).
    """

    def f(s):
        z, dz = seg.nodes(s)
        offsets = None
        if isinstance(seg, Line) and (seg.sing_start or seg.sing_end):
            d0, d1 = seg.offsets(s)
            offsets = {}
            if seg.sing_start:
                offsets[seg.z0] = d0
            if seg.sing_end:
                offsets[seg.z1] = d1
        y = seg.sheet * y_plus(spec, z, offsets)
        vals = integrand(z, y) * dz
        if log_coef is not None:
            if seg.log_end == "z":
                dlog = dz / z
            elif seg.log_end == "inv":
                dlog = -dz / z
            else:
                raise ValueError("segment has no log-regularised end")
            vals = vals - np.asarray(log_coef)[:, None] * dlog[None, :]
        return vals

    return adaptive_quad(f, tol)


def integrate(spec, path, integrand, tol=DEFAULT_TOL, log_coef=None):
    """Integrate along a whole path.

    With ``log_coef`` the last segment is regularised and the returned value is
    ``lim_{zeta->0} [int_path - log_coef * log(zeta)]``.
    """
    total = None
    err = 0.0
    nseg = len(path.segments)
    for k, seg in enumerate(path.segments):
        lc = log_coef if (log_coef is not None and k == nseg - 1) else None
        val, e = integrate_segment(spec, seg, integrand, tol, lc)
        if lc is not None:
            zs = seg.start
            zeta0 = zs if seg.log_end == "z" else 1.0 / zs
            val = val - np.asarray(lc) * np.log(zeta0)
        total = val if total is None else total + val
        err += e
    return total, err


# --------------------------------------------------------------------------
# geometry: margins, cycles, path planning


@dataclass(frozen=True)
class Geometry:
    """Cut system plus the offsets used by cycles and the path planner."""

    cuts: tuple
    margin: float
    radius: float  # radius of the outer waypoint ring

    def clear_of_cuts(self, a, b, clearance, allow_touch=()):
        """Segment [a, b] stays ``clearance`` away from every cut.

        ``allow_touch`` lists branch points where the segment may end on a cut;
        near such a point the check is relaxed inside a small ball.
        """
        for c0, c1 in self.cuts:
            touching = [p for p in allow_touch if abs(p - c0) < 1e-14 or abs(p - c1) < 1e-14]
            if not touching:
                if seg_seg_dist(a, b, c0, c1) < clearance:
                    return False
                continue
            p = touching[0]
            other = c1 if abs(p - c0) < 1e-14 else c0
            # leave p in a direction at least 45 degrees away from the cut
            q = b if abs(a - p) < 1e-14 else a
            if abs(q - p) < 1e-14:
                return False
            ang = abs(np.angle((q - p) / (other - p)))
            if ang < np.pi / 4:
                return False
            # the part of the segment beyond a short stub must be clear
            stub = p + (q - p) * min(1.0, self.margin / abs(q - p))
            if seg_seg_dist(stub, q, c0, c1) < 0.5 * clearance and abs(q - stub) > 0:
                return False
        return True


def make_geometry(spec):
    cuts = tuple(build_cuts(spec))
    pts = spec.branch_points
    dmin = min(abs(pts[i] - pts[j]) for i in range(len(pts)) for j in range(i + 1, len(pts)))
    d0 = min(_seg_dist_point(a, b, 0j) for a, b in cuts)
    dcut = min(
        (seg_seg_dist(*cuts[i], *cuts[j]) for i in range(len(cuts)) for j in range(i + 1, len(cuts))),
        default=np.inf,
    )
    margin = min(0.1 * dmin, 0.25 * d0, 0.2 * dcut)
    radius = 2.0 * spec.scale + 1.0
    return Geometry(cuts, margin, radius)


def a_cycle(geom, j):
    """Counter-clockwise stadium around cut ``j`` on sheet +1 at distance ``margin``."""
    a, b = geom.cuts[j]
    d = geom.margin
    u = (b - a) / abs(b - a)
    n = 1j * u
    phi = np.angle(u)
    segs = (
        Line(a - d * n, b - d * n, 1),
        Arc(b, d, phi - np.pi / 2, phi + np.pi / 2, 1),
        Line(b + d * n, a + d * n, 1),
        Arc(a, d, phi + np.pi / 2, phi + 3 * np.pi / 2, 1),
    )
    return Path(segs, f"a{j + 1}")


def _waypoints(geom):
    pts = []
    for a, b in geom.cuts:
        u = (b - a) / abs(b - a)
        n = 1j * u
        d = 2.0 * geom.margin
        pts += [a - d * u, b + d * u, a - d * u + d * n, a - d * u - d * n,
                b + d * u + d * n, b + d * u - d * n, 0.5 * (a + b) + d * n, 0.5 * (a + b) - d * n]
    d = 2.0 * geom.margin
    pts += [d, -d, 1j * d, -1j * d]
    pts += list(geom.radius * np.exp(2j * np.pi * np.arange(12) / 12 + 0.3j))
    return pts


def _edge_ok(geom, spec, a, b, touch, avoid_zero):
    clearance = 0.5 * geom.margin
    if not geom.clear_of_cuts(a, b, clearance, touch):
        return False
    if avoid_zero and _seg_dist_point(a, b, 0j) < 0.5 * geom.margin:
        return False
    return True


def plan_route(spec, geom, start, target, start_is_branch=True, target_is_branch=False,
               target_is_zero=False):
    """Shortest polyline from ``start`` to ``target`` through the waypoint graph."""
    touch = []
    if start_is_branch:
        touch.append(start)
    if target_is_branch:
        touch.append(target)
    nodes = [start, target] + [w for w in _waypoints(geom)
                               if min(seg_seg_dist(w, w, c0, c1) for c0, c1 in geom.cuts) >= geom.margin
                               and abs(w) >= geom.margin]
    n = len(nodes)
    near_zero = abs(target) < geom.margin

    def ok(i, j):
        a, b = nodes[i], nodes[j]
        t = [p for p in touch if abs(p - a) < 1e-14 or abs(p - b) < 1e-14]
        if j == 1 or i == 1:
            if target_is_zero:
                # only the final leg may run into z = 0
                other = a if j == 1 else b
                return _edge_ok(geom, spec, other, 0.5 * other, t, True) and \
                    geom.clear_of_cuts(other, 0j, 0.5 * geom.margin, t)
            if near_zero:
                return geom.clear_of_cuts(a, b, 0.5 * geom.margin, t) and \
                    _seg_dist_point(a, b, 0j) >= 0.5 * abs(target)
        return _edge_ok(geom, spec, a, b, t, True)

    dist = [np.inf] * n
    prev = [-1] * n
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        dcur, i = heapq.heappop(heap)
        if dcur > dist[i]:
            continue
        if i == 1:
            break
        for j in range(n):
            if j == i:
                continue
            w = dcur + abs(nodes[j] - nodes[i])
            if w < dist[j] - 1e-15 and ok(i, j):
                dist[j] = w
                prev[j] = i
                heapq.heappush(heap, (w, j))
    if not np.isfinite(dist[1]):
        raise NoPathFound(f"no cut-avoiding route from {start} to {target}")
    route = [1]
    while route[-1] != 0:
        route.append(prev[route[-1]])
    return [nodes[k] for k in reversed(route)]


def polyline_path(points, sheet, sing_start=False, sing_end=False, log_end=None, label=""):
    segs = []
    m = len(points) - 1
    for k in range(m):
        segs.append(Line(points[k], points[k + 1], sheet,
                         sing_start=sing_start and k == 0,
                         sing_end=sing_end and k == m - 1,
                         log_end=log_end if k == m - 1 else None))
    return Path(tuple(segs), label)


def b_cycle_halves(spec, geom, j):
    """Sheet-(+1) half of b_j: from an endpoint of the last cut to an endpoint of cut j.

    The full cycle is this path followed by its reverse on sheet -1.
    """
    last = geom.cuts[-1]
    cj = geom.cuts[j]
    best = None
    for s in last:
        for t in cj:
            try:
                pts = plan_route(spec, geom, s, t, start_is_branch=True, target_is_branch=True)
            except NoPathFound:
                continue
            length = sum(abs(pts[k + 1] - pts[k]) for k in range(len(pts) - 1))
            if best is None or length < best[0] - 1e-12:
                best = (length, pts)
    if best is None:
        raise NoPathFound(f"no b-cycle route for cut {j}")
    pts = best[1]
    if len(pts) == 2:
        return Path((Line(pts[0], pts[1], 1, True, True),), f"b{j + 1}")
    return polyline_path(pts, 1, sing_start=True, sing_end=True, label=f"b{j + 1}")


def full_b_cycle(half):
    back = tuple(replace(seg, sheet=-1) for seg in half.reversed().segments)
    return Path(half.segments + back, half.label)


@dataclass(frozen=True)
class Homology:
    a: tuple
    b_half: tuple

    @property
    def b(self):
        return tuple(full_b_cycle(h) for h in self.b_half)


def build_homology(spec, geom=None):
    """Canonical cycles ``a_j`` (stadia on sheet +1) and ``b_j`` (cut j <-> last cut)."""
    geom = geom or make_geometry(spec)
    p = spec.genus
    return Homology(
        tuple(a_cycle(geom, j) for j in range(p)),
        tuple(b_cycle_halves(spec, geom, j) for j in range(p)),
    )


def integrate_b_cycle(spec, half, integrand, tol=DEFAULT_TOL):
    """``int_{b_j}`` = (sheet +1 half) - (same projection on sheet -1)."""
    v_plus, e1 = integrate(spec, half, integrand, tol)
    minus = Path(tuple(replace(seg, sheet=-1) for seg in half.segments), half.label)
    v_minus, e2 = integrate(spec, minus, integrand, tol)
    return v_plus - v_minus, e1 + e2


class PathRegistry:
    """One cut-avoiding path from ``Q0`` per target, shared by all Abelian integrals.

    The route depends only on the projection ``z`` of the target, so the paths
    to ``P`` and ``P*`` are sheet images of each other.
    """

    FAR = None

    def __init__(self, spec, geom=None):
        self.spec = spec
        self.geom = geom or make_geometry(spec)
        self._routes = {}

    def _route(self, key, target, **kw):
        if key not in self._routes:
            self._routes[key] = plan_route(self.spec, self.geom, self.spec.base_point, target, **kw)
        return self._routes[key]

    def path_to(self, P):
        """Path from ``Q0`` to ``P``; final segment regularisation tags are set for 0 and infinity."""
        spec = self.spec
        if P.infinite:
            far = self.geom.radius * np.exp(0.3j)
            pts = self._route("inf", far)
            base = polyline_path(pts, P.sheet, sing_start=True)
            return Path(base.segments + (Ray(far, P.sheet),), "inf")
        z = complex(P.z)
        if P.branch:
            if abs(z - spec.base_point) < 1e-14:
                return Path((), "Q0")
            pts = self._route(("bp", z), z, target_is_branch=True)
            return polyline_path(pts, 1, sing_start=True, sing_end=True)
        if abs(z) == 0.0:
            pts = self._route("zero", 0j, target_is_zero=True)
            return polyline_path(pts, P.sheet, sing_start=True, log_end="z")
        pts = self._route(("pt", z), z)
        return polyline_path(pts, P.sheet, sing_start=True)

"""Recursion for the coefficients f, g, h on concrete lattice data.

Shift convention: ``x^+(n) = x(n+1)``, ``x^-(n) = x(n-1)``.  The recursion is

    f_0 = -2 alpha^+,  g_0 = 1,  h_0 = 2 beta,
    g_{l+1} - g_{l+1}^- = alpha h_l^- + beta f_l,
    f_{l+1}^- = f_l - alpha (g_{l+1} + g_{l+1}^-),
    h_{l+1} = h_l^- + beta (g_{l+1} + g_{l+1}^-).

The first-order difference equation for ``g_{l+1}`` fixes it up to an
additive constant.  The homogeneous coefficients (all summation constants
zero) are pinned at the reference site by requiring that order ``k`` of the
formal product ``G^2 - F H`` vanish; this reproduces the local closed forms
such as ``g_1 = -2 alpha^+ beta``.  Summation constants are then applied by
linearity, ``f_l = sum_k c_{l-k} fhat_k`` with ``c_0 = 1``.

Polynomials are stored with ascending coefficients:
``F_p = sum_l f_{p-l} z^l``, ``G_{p+1} = sum_l g_{p+1-l} z^l`` and
``H_{p+1} = sum_l h_{p+1-l} z^l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .curve import point_from_y
from .errors import DegenerateLeadingCoefficient, RootAtBranchPointCollision, WindowTooSmall


@dataclass(frozen=True)
class LatticeSeq:
    """Sequences ``alpha(n), beta(n)`` for ``n = n_min .. n_min + len - 1``."""

    n_min: int
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=complex)
        b = np.asarray(self.beta, dtype=complex)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def n_max(self):
        return self.n_min + len(self.alpha) - 1

    @property
    def sites(self):
        return np.arange(self.n_min, self.n_max + 1)

    def idx(self, n):
        return n - self.n_min

    def a(self, n):
        return self.alpha[self.idx(n)]

    def b(self, n):
        return self.beta[self.idx(n)]

    def degenerate_sites(self, tol=1e-12):
        """Sites where ``alpha beta`` is 0 or 1 (curve-dependent operations need neither)."""
        ab = self.alpha * self.beta
        bad = (np.abs(ab) <= tol) | (np.abs(ab - 1) <= tol)
        return self.sites[bad].tolist()

    def scaled(self, A):
        return LatticeSeq(self.n_min, A * self.alpha, self.beta / A)


def _shift(x, k):
    """``y(n) = x(n + k)`` with NaN where undefined."""
    y = np.full_like(x, np.nan)
    if k == 0:
        return x.copy()
    if k > 0:
        y[:-k] = x[k:]
    else:
        y[-k:] = x[:k]
    return y


def _anchored_sum(d, i_ref, g_ref):
    """Solve ``g(n) - g(n-1) = d(n)`` with ``g(i_ref) = g_ref``."""
    g = np.full_like(d, np.nan)
    g[i_ref] = g_ref
    if i_ref + 1 < len(d):
        g[i_ref + 1:] = g_ref + np.cumsum(d[i_ref + 1:])
    if i_ref > 0:
        # g(n) = g(n+1) - d(n+1), walking left
        back = np.cumsum(d[i_ref:0:-1])
        g[i_ref - 1::-1] = g_ref - back
    return g


@dataclass(frozen=True)
class HierarchyCoefficients:
    """``f[l], g[l], h[l]`` arrays over the sequence sites, levels ``0..p+1``.

    NaN marks sites where a coefficient needs data outside the window.
    """

    seq: LatticeSeq
    p: int
    n_ref: int
    constants: np.ndarray  # c_0 = 1, c_1, ..., c_{p+1}
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    fhat: np.ndarray
    ghat: np.ndarray
    hhat: np.ndarray

    def valid_sites(self, level=None):
        """Sites where every coefficient up to ``level`` (default p+1) is defined."""
        level = self.p + 1 if level is None else level
        ok = np.ones(len(self.seq.alpha), dtype=bool)
        for arr in (self.f, self.g, self.h):
            ok &= np.all(np.isfinite(arr[: level + 1]), axis=0)
        return self.seq.sites[ok]


def _homogeneous(seq, levels, i_ref):
    """Coefficients with zero summation constants, calibrated at ``i_ref``."""
    al, be = seq.alpha, seq.beta
    n = len(al)
    f = np.full((levels + 1, n), np.nan, dtype=complex)
    g = np.full_like(f, np.nan)
    h = np.full_like(f, np.nan)
    f[0] = -2 * _shift(al, 1)
    g[0] = 1.0
    h[0] = 2 * be
    for ell in range(levels):
        k = ell + 1
        d = al * _shift(h[ell], -1) + be * f[ell]
        # order-k coefficient of the formal G^2 - F H vanishes at the reference site
        acc = sum(f[i, i_ref] * h[k - 1 - i, i_ref] for i in range(k))
        acc -= sum(g[i, i_ref] * g[k - i, i_ref] for i in range(1, k))
        g_ref = 0.5 * acc
        if not np.isfinite(g_ref):
            raise WindowTooSmall(f"reference site lacks data for level {k}")
        g[k] = _anchored_sum(d, i_ref, g_ref)
        gs = g[k] + _shift(g[k], -1)  # g_{l+1} + g_{l+1}^-
        # f_{l+1}(n) = f_l(n+1) - alpha(n+1) (g_{l+1}(n+1) + g_{l+1}(n))
        f[k] = _shift(f[ell], 1) - _shift(al, 1) * _shift(gs, 1)
        h[k] = _shift(h[ell], -1) + be * gs
    return f, g, h


def run_recursion(seq, constants, p, n_ref=None, g_top=None):
    """Coefficients ``f_l, g_l, h_l`` for ``l = 0..p+1``.

    Parameters
    ----------
    seq : LatticeSeq
    constants : sequence of complex
        Summation constants ``c_1, ..., c_p`` (extra entries are used for
        ``c_{p+1}`` if present).
    p : int
    n_ref : int, optional
        Calibration site; defaults to the middle of the window.
    g_top : complex, optional
        If given, ``c_{p+1}`` is chosen so that ``g_{p+1}(n_ref) = g_top``.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    n_sites = len(seq.alpha)
    if n_sites < 2 * (p + 2) + 1:
        raise WindowTooSmall(f"window of {n_sites} sites is too small for p = {p}")
    n_ref = seq.n_min + n_sites // 2 if n_ref is None else n_ref
    i_ref = seq.idx(n_ref)
    if not (p + 1 <= i_ref <= n_sites - p - 3):
        raise WindowTooSmall(f"n_ref = {n_ref} is too close to the window edge")
    fh, gh, hh = _homogeneous(seq, p + 1, i_ref)
    c = np.zeros(p + 2, dtype=complex)
    c[0] = 1.0
    cs = list(constants)
    c[1: 1 + min(len(cs), p + 1)] = cs[: p + 1]
    if g_top is not None:
        partial = sum(c[p + 1 - k] * gh[k, i_ref] for k in range(1, p + 2))
        c[p + 1] = g_top - partial
    f = np.zeros_like(fh)
    g = np.zeros_like(gh)
    h = np.zeros_like(hh)
    for ell in range(p + 2):
        for k in range(ell + 1):
            f[ell] += c[ell - k] * fh[k]
            g[ell] += c[ell - k] * gh[k]
            h[ell] += c[ell - k] * hh[k]
    return HierarchyCoefficients(seq, p, n_ref, c, f, g, h, fh, gh, hh)


def dual_identity_residual(coeffs):
    """Max over levels and sites of ``|g_{l+1} - g_{l+1}^- - alpha h_{l+1} - beta f_{l+1}^-|``."""
    al, be = coeffs.seq.alpha, coeffs.seq.beta
    worst = 0.0
    for ell in range(coeffs.p + 1):
        k = ell + 1
        r = coeffs.g[k] - _shift(coeffs.g[k], -1) - al * coeffs.h[k] - be * _shift(coeffs.f[k], -1)
        r = r[np.isfinite(r)]
        if r.size:
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


dual_identity_check = dual_identity_residual


@dataclass(frozen=True)
class LaurentPolyTriple:
    """Ascending coefficients of ``F_p``, ``G_{p+1}``, ``H_{p+1}`` at one site."""

    n: int
    F: np.ndarray
    G: np.ndarray
    H: np.ndarray

    @property
    def p(self):
        return len(self.F) - 1

    def evaluate(self, z):
        return P.polyval(z, self.F), P.polyval(z, self.G), P.polyval(z, self.H)

    def invariant(self):
        """Ascending coefficients of ``G^2 - F H``."""
        return P.polysub(P.polymul(self.G, self.G), P.polymul(self.F, self.H))


def assemble(coeffs, n, g_top=None):
    """Place the level coefficients at site ``n`` into polynomials.

    ``g_top`` overrides the constant term of ``G`` (a lattice constant for
    solutions).
    """
    p = coeffs.p
    i = coeffs.seq.idx(n)
    F = np.array([coeffs.f[p - ell, i] for ell in range(p + 1)])
    G = np.array([coeffs.g[p + 1 - ell, i] for ell in range(p + 2)])
    H = np.array([coeffs.h[p + 1 - ell, i] for ell in range(p + 2)])
    if g_top is not None:
        G[0] = g_top
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G)) and np.all(np.isfinite(H))):
        raise WindowTooSmall(f"site {n} lacks data for the polynomial triple")
    return LaurentPolyTriple(n, F, G, H)


def U_matrix(z, alpha, beta):
    """Transfer matrix ``[[z, alpha], [z beta, 1]]``."""
    return np.array([[z, alpha], [z * beta, 1.0]], dtype=complex)


def V_matrix(z, prev):
    """``V_{p+1}(z, n)`` built from the triple at ``n - 1``."""
    F, G, H = prev.evaluate(z)
    return np.array([[G, -F], [H, -G]], dtype=complex)


def default_z_samples():
    """Twelve points on the circles ``|z| = 0.7`` and ``|z| = 1.5``."""
    k = np.arange(6)
    return np.concatenate([0.7 * np.exp(2j * np.pi * (k + 0.25) / 6), 1.5 * np.exp(2j * np.pi * (k + 0.5) / 6)])


def zero_curvature_residual(prev, cur, alpha, beta, z_samples=None):
    """Residuals of the four polynomial relations and of ``U V - V^+ U`` at site ``n``.

    ``prev`` and ``cur`` are the triples at ``n - 1`` and ``n``; ``alpha`` and
    ``beta`` are the values at ``n``.  Returns a dict of maxima over the samples.
    """
    zs = default_z_samples() if z_samples is None else np.asarray(z_samples)
    out = {"r_F": 0.0, "r_H": 0.0, "r_G1": 0.0, "r_G2": 0.0, "matrix": 0.0}
    for z in zs:
        F, G, H = cur.evaluate(z)
        Fm, Gm, Hm = prev.evaluate(z)
        out["r_F"] = max(out["r_F"], abs(F - z * Fm - alpha * (G + Gm)))
        out["r_H"] = max(out["r_H"], abs(z * beta * (G + Gm) + Hm - z * H))
        out["r_G1"] = max(out["r_G1"], abs(z * (Gm - G) + alpha * Hm + z * beta * F))
        out["r_G2"] = max(out["r_G2"], abs(G - Gm - alpha * H - z * beta * Fm))
        U = U_matrix(z, alpha, beta)
        M = U @ V_matrix(z, prev) - V_matrix(z, cur) @ U
        out["matrix"] = max(out["matrix"], float(np.max(np.abs(M))))
    out["max"] = max(out.values())
    return out


@dataclass(frozen=True)
class InvariantReport:
    coefficients: np.ndarray  # (sites, 2p+3) ascending
    mean: np.ndarray
    drift: float
    roots: np.ndarray


def lattice_invariant(triples, orders=None):
    """Coefficients of ``G^2 - F H`` per site, their drift, and the roots of the mean.

    ``orders`` restricts the drift to the coefficients of ``z**(2p+2-k)`` for
    ``k`` in ``orders`` (the top orders are lattice constants for any input
    sequence; the full polynomial only for solutions).
    """
    coefs = np.array([t.invariant() for t in triples])
    mean = coefs.mean(axis=0)
    deg = coefs.shape[1] - 1
    cols = list(range(deg + 1)) if orders is None else [deg - k for k in orders]
    sub = coefs[:, cols]
    drift = float(np.max(np.abs(sub - sub[0]))) if len(coefs) > 1 else 0.0
    roots = np.sort_complex(P.polyroots(mean))
    return InvariantReport(coefs, mean, drift, roots)


def sb_residual(seq, coeffs, g_top):
    """``(f_p - 2 g alpha, h_p^- + 2 g beta)`` per site (NaN outside the valid range)."""
    p = coeffs.p
    r1 = coeffs.f[p] - 2 * g_top * seq.alpha
    r2 = _shift(coeffs.h[p], -1) + 2 * g_top * seq.beta
    return r1, r2


def sb_explicit(seq, p, g_top, c1=0.0):
    """Closed forms of the first two stationary equations (p = 0, 1)."""
    a, b = seq.alpha, seq.beta
    ap, app = _shift(a, 1), _shift(a, 2)
    am = _shift(a, -1)
    bp, bm, bmm = _shift(b, 1), _shift(b, -1), _shift(b, -2)
    if p == 0:
        return 2 * (-ap - g_top * a), 2 * (bm + g_top * b)
    if p == 1:
        r1 = 2 * (ap * app * bp + ap * ap * b - app - c1 * ap - g_top * a)
        r2 = 2 * (-am * bmm * bm - a * bm * bm + bmm + c1 * bm + g_top * b)
        return r1, r2
    raise ValueError("explicit forms are implemented for p = 0 and p = 1 only")


def constants_from_curve(branch_points, p=None):
    """Summation constants ``c_1..c_p`` of a solution on the given curve.

    For a solution ``G^2 - F H = prod (z - E_m)``, and in the variable
    ``w = 1/z`` the top orders give ``(sum c_k w^k)^2 = prod (1 - E_m w)``
    modulo ``w^{p+1}``.
    """
    E = np.asarray(branch_points, dtype=complex)
    p = len(E) // 2 - 1 if p is None else p
    r = np.array([1.0 + 0j])
    for e in E:
        r = P.polymul(r, [1.0, -e])
    # power-series square root with s_0 = 1
    s = np.zeros(p + 1, dtype=complex)
    s[0] = 1.0
    for k in range(1, p + 1):
        acc = r[k] if k < len(r) else 0.0
        acc -= sum(s[i] * s[k - i] for i in range(1, k))
        s[k] = 0.5 * acc
    return s[1:]


# --------------------------------------------------------------------------
# divisors


def _polish(coef, roots, steps=1):
    d = P.polyder(coef)
    out = []
    for r in roots:
        for _ in range(steps):
            dv = P.polyval(r, d)
            if dv != 0:
                r = r - P.polyval(r, coef) / dv
        out.append(r)
    return np.array(out, dtype=complex)


def sorted_roots(coef):
    """Roots of an ascending polynomial, one Newton step each, sorted by (Re, Im)."""
    coef = np.asarray(coef, dtype=complex)
    if len(coef) <= 1:
        return np.array([], dtype=complex)
    r = _polish(coef, P.polyroots(coef))
    return np.array(sorted(r, key=lambda v: (v.real, v.imag)), dtype=complex)


def _lift(spec, z, y):
    try:
        return point_from_y(spec, z, y, rel_tol=1e-6)
    except ValueError as exc:
        raise RootAtBranchPointCollision(str(exc)) from exc


def extract_divisors(triple, spec, g_top=None):
    """Zeros of ``F_p`` and ``H_{p+1}`` lifted to the curve.

    ``mu_j`` is lifted with ``y = G(mu_j)`` and ``nu_l`` with ``y = -G(nu_l)``.
    The root ``nu_0 = 0`` of ``H`` is imposed and appears as ``P_{0,-}`` at the
    front of the ``nu`` list.
    """
    if abs(triple.F[-1]) == 0 or abs(triple.H[-1]) == 0:
        raise DegenerateLeadingCoefficient("F_p or H_{p+1} has vanishing leading coefficient")
    mu_z = sorted_roots(triple.F)
    nu_z = sorted_roots(triple.H[1:])  # H / z
    G = triple.G.copy()
    if g_top is not None:
        G[0] = g_top
    scale = max(1.0, spec.scale)
    for z in np.concatenate([mu_z, nu_z]):
        hits = [e for e in spec.branch_points if abs(z - e) <= 1e-7 * scale]
        if hits:
            close = np.sum(np.abs(mu_z - hits[0]) <= 1e-7 * scale)
            if close >= 2:
                raise RootAtBranchPointCollision(f"double root of F at branch point {hits[0]}")
    mu = [_lift(spec, z, P.polyval(z, G)) for z in mu_z]
    nu = [_lift(spec, 0.0, -G[0])] + [_lift(spec, z, -P.polyval(z, G)) for z in nu_z]
    return mu, nu


def trace_residuals(mu, nu, alpha, alpha_next, beta, beta_next, g_top):
    """Residuals of the trace formulas for ``alpha / alpha^+`` and ``beta^+ / beta``.

    ``nu`` may include ``P_{0,-}`` (``z = 0``); it is skipped.
    """
    p = len(mu)
    sgn = (-1) ** (p + 1)
    pm = np.prod([P_.z for P_ in mu]) if mu else 1.0
    nus = [Q.z for Q in nu if Q.z != 0]
    pn = np.prod(nus) if nus else 1.0
    r1 = abs(alpha / alpha_next - sgn * pm / g_top)
    r2 = abs(beta_next / beta - sgn * pn / g_top)
    return r1, r2


trace_check = trace_residuals


def is_special(points, scale=1.0, tol=1e-9):
    """Does the divisor contain a pair ``{P, P*}`` or a repeated branch point?

    Returns ``(special, witness)``.
    """
    pts = list(points)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            a, b = pts[i], pts[j]
            if a.infinite or b.infinite:
                if a.infinite and b.infinite and a.sheet != b.sheet:
                    return True, (a, b)
                continue
            if abs(a.z - b.z) > tol * max(1.0, scale):
                continue
            if a.branch and b.branch:
                return True, (a, b)
            ya, yb = a.y, b.y
            if abs(ya + yb) <= 1e-6 * max(1.0, abs(ya), abs(yb)) and abs(ya - yb) > 0:
                return True, (a, b)
    return False, None

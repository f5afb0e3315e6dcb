"""Cross-checks tying the theta pipeline to the recursion side.

``F``, ``G``, ``H`` at a site are recovered from ``phi`` on both sheets:
``phi(P) + phi(P*) = 2 G / F`` and ``phi(P) phi(P*) = H / F``.  The
recovered triples then feed the zero-curvature relations, the invariant
``G^2 - F H``, the trace formulas and the divisor flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from . import contour
from .abelian import lattice_distance, random_point
from .curve import point, point_from_y, y_plus
from .errors import IllConditionedInterpolation, PoleOfPhi
from .hierarchy import (
    LaurentPolyTriple,
    U_matrix,
    V_matrix,
    sorted_roots,
    trace_residuals,
    zero_curvature_residual,
)
from .solution import alpha_n, baker_akhiezer, beta_n, phi, product_formula, psi1_product, riccati_residual

DEFAULT_TOLERANCES = {
    "riccati": 1e-6,
    "transfer": 1e-6,
    "eigenrelation": 1e-6,
    "zero_curvature": 1e-6,
    "R_match": 1e-7,
    "R_drift": 1e-8,
    "H_constant_term": 1e-9,
    "sb": 1e-6,
    "trace": 1e-6,
    "product": 1e-8,
    "divisor_flow": 1e-6,
    "baker_akhiezer": 1e-6,
    "quasiperiodicity": 1e-6,
}


@dataclass(frozen=True)
class Residual:
    name: str
    max: float
    mean: float
    tolerance: float
    skipped: bool = False
    note: str = ""

    @property
    def passed(self):
        return self.skipped or self.max <= self.tolerance

    def as_dict(self):
        return {
            "max": self.max,
            "mean": self.mean,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "skipped": self.skipped,
            "note": self.note,
        }


def residual(name, values, tol, note=""):
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return Residual(name, 0.0, 0.0, tol, skipped=True, note=note or "no samples")
    return Residual(name, float(np.max(v)), float(np.mean(v)), tol, note=note)


@dataclass(frozen=True)
class VerificationReport:
    residuals: dict
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.residuals.values())

    def as_dict(self):
        return {
            "passed": self.passed,
            "residuals": {k: r.as_dict() for k, r in self.residuals.items()},
            "extras": self.extras,
        }


# --------------------------------------------------------------------------
# sample points


def sample_radii(spec):
    """A small circle inside the cut-free disc around 0 and a large one outside all cuts."""
    geom = contour.make_geometry(spec)
    d0 = min(contour._seg_dist_point(a, b, 0j) for a, b in geom.cuts)
    return 0.6 * d0, 1.5 * spec.scale + 0.5


def z_samples(spec, count=None):
    """Deterministic z samples split between the two circles."""
    p = spec.genus
    count = count or 4 * p + 8
    r_small, r_big = sample_radii(spec)
    k1 = count // 2
    k2 = count - k1
    a = r_small * np.exp(2j * np.pi * (np.arange(k1) + 0.3) / k1)
    b = r_big * np.exp(2j * np.pi * (np.arange(k2) + 0.7) / k2)
    return np.concatenate([a, b])


def generic_points(spec, count, seed):
    rng = np.random.default_rng(seed)
    return [random_point(spec, rng) for _ in range(count)]


# --------------------------------------------------------------------------
# reconstruction


def reconstruct_FGH(state, n, zs=None, cond_limit=1e10):
    """Recover the polynomial triple at site ``n`` from ``phi`` on both sheets.

    ``F`` has degree p with leading coefficient ``-2 alpha(n+1)``, ``G`` is
    monic of degree p+1 and ``H`` of degree p+1; all unknown coefficients
    are fitted by least squares.
    """
    spec = state.spec
    p = spec.genus
    zs = z_samples(spec) if zs is None else np.asarray(zs)
    s_vals, q_vals, used = [], [], []
    for z in zs:
        try:
            f1 = phi(state, point(spec, z, 1), n)
            f2 = phi(state, point(spec, z, -1), n)
        except PoleOfPhi:
            continue
        s_vals.append(f1 + f2)
        q_vals.append(f1 * f2)
        used.append(z)
    zs = np.array(used)
    if len(zs) < 2 * p + 4:
        raise IllConditionedInterpolation(f"only {len(zs)} usable samples at n = {n}")
    s = np.array(s_vals)
    q = np.array(q_vals)
    f_lead = -2 * alpha_n(state, n + 1)
    # G_0..G_p and F_0..F_{p-1}; rows scaled by the sample modulus
    V = np.vander(zs, p + 2, increasing=True)
    M = np.hstack([V[:, : p + 1], -(s[:, None] / 2) * V[:, :p]])
    rhs = (s / 2) * f_lead * zs**p - zs ** (p + 1)
    w = 1.0 / np.maximum(1.0, np.abs(zs)) ** (p + 1)
    Mw = M * w[:, None]
    cond = np.linalg.cond(Mw)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedInterpolation(f"reconstruction system has condition {cond:.3g}", n=n)
    x, *_ = np.linalg.lstsq(Mw, rhs * w, rcond=None)
    G = np.concatenate([x[: p + 1], [1.0]])
    F = np.concatenate([x[p + 1:], [f_lead]])
    Fz = P.polyval(zs, F)
    Hw = V * w[:, None]
    h, *_ = np.linalg.lstsq(Hw, q * Fz * w, rcond=None)
    return LaurentPolyTriple(n, F, G, h)


# --------------------------------------------------------------------------
# individual checks


def check_transfer(state, points, n_range, triples=None):
    """Residuals of ``Psi(n) = U(z, n) Psi(n-1)`` and ``-y Psi(n-1) = V(z, n) Psi(n-1)``.

    ``triples`` maps ``n -> LaurentPolyTriple``; missing ones are reconstructed.
    Returns ``(transfer, eigen)`` lists of normalised residuals.
    """
    triples = {} if triples is None else triples
    tr, ev = [], []
    for P_ in points:
        z, y = P_.z, P_.y
        prev = np.array(baker_akhiezer(state, P_, n_range[0] - 1))
        for n in range(n_range[0], n_range[1] + 1):
            cur = np.array(baker_akhiezer(state, P_, n))
            U = U_matrix(z, alpha_n(state, n), beta_n(state, n))
            tr.append(np.max(np.abs(cur - U @ prev)) / np.max(np.abs(cur)))
            if n - 1 not in triples:
                triples[n - 1] = reconstruct_FGH(state, n - 1)
            V = V_matrix(z, triples[n - 1])
            ev.append(np.max(np.abs(V @ prev + y * prev)) / (abs(y) * np.max(np.abs(prev))))
            prev = cur
    return tr, ev


def genus0_transfer_residual(spec, sol, points, n_range):
    """Transfer and eigenrelation residuals for the closed-form genus-0 solution.

    ``phi = (y + G) / F`` with ``F = -2 alpha^+``, ``G = z + g_1`` and
    ``H = 2 beta z``; ``Psi`` comes from the finite products.
    """
    g1 = sol.diagnostics["g1"]
    lo, hi = sol.window
    al = dict(zip(sol.sites.tolist(), sol.alpha))
    be = dict(zip(sol.sites.tolist(), sol.beta))

    def phi0(y, z, n):
        return (y + z + g1) / (-2 * al[n + 1])

    tr, ev = [], []
    for P_ in points:
        z, y = P_.z, P_.y
        n0 = sol.n0
        psi = {n0: np.array([1.0, phi0(y, z, n0)])}
        for n in range(n0 + 1, min(hi - 1, n_range[1]) + 1):
            f_m = phi0(y, z, n - 1)
            p1 = psi[n - 1][0] * (z + al[n] * f_m)
            p2 = psi[n - 1][1] * (z * be[n] / f_m + 1)
            psi[n] = np.array([p1, p2])
        for n in range(n0 - 1, max(lo, n_range[0] - 1) - 1, -1):
            f_m = phi0(y, z, n)
            p1 = psi[n + 1][0] / (z + al[n + 1] * f_m)
            p2 = psi[n + 1][1] / (z * be[n + 1] / f_m + 1)
            psi[n] = np.array([p1, p2])
        for n in sorted(psi):
            if n - 1 not in psi:
                continue
            U = U_matrix(z, al[n], be[n])
            tr.append(np.max(np.abs(psi[n] - U @ psi[n - 1])) / np.max(np.abs(psi[n])))
            prev = LaurentPolyTriple(n - 1, np.array([-2 * al[n]]), np.array([g1, 1.0]), np.array([0.0, 2 * be[n - 1]]))
            V = V_matrix(z, prev)
            ev.append(np.max(np.abs(V @ psi[n - 1] + y * psi[n - 1])) / (abs(y) * np.max(np.abs(psi[n - 1]))))
    return tr, ev


def lift_mu(spec, triple):
    """Zeros of ``F`` lifted with ``y = G(mu)``."""
    return [point_from_y(spec, z, P.polyval(z, triple.G), rel_tol=1e-5) for z in sorted_roots(triple.F)]


def divisor_flow_residual(state, triple):
    """Lattice distance between the Abel image of the recovered ``mu(n)`` and its linear prediction."""
    mu = lift_mu(state.spec, triple)
    img = sum(state.stack.abel(Q) for Q in mu)
    pred = state.rho_mu + (triple.n - state.n0) * state.delta
    return lattice_distance(img - pred, state.tau)


def is_unit_circle_symmetric(spec, tol=1e-10):
    """All branch points on the unit circle and closed under conjugation."""
    E = np.array(spec.branch_points)
    if np.any(np.abs(np.abs(E) - 1) > tol):
        return False
    return all(np.min(np.abs(E - np.conj(e))) <= tol for e in E)


def _coef_dev(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# --------------------------------------------------------------------------
# report


def full_report(state, window, tolerances=None, seed=2024, n_points=10, n_transfer_points=5):
    """Run every check on ``window = (n_min, n_max)`` and collect the residuals."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    spec = state.spec
    p = spec.genus
    g = spec.g_top
    lo, hi = window
    pts = generic_points(spec, n_points, seed)
    out = {}

    out["riccati"] = residual(
        "riccati", [riccati_residual(state, P_, n) for P_ in pts for n in (lo + 1, state.n0, hi)], tol["riccati"]
    )

    triples = {n: reconstruct_FGH(state, n) for n in range(lo - 1, hi + 1)}
    t_lo, t_hi = max(lo, state.n0 - 3), min(hi, state.n0 + 3)
    tr, ev = check_transfer(state, pts[:n_transfer_points], (t_lo, t_hi), triples)
    out["transfer"] = residual("transfer", tr, tol["transfer"])
    out["eigenrelation"] = residual("eigenrelation", ev, tol["eigenrelation"])

    zc, sb, trace, prod, flow, rmatch, h0 = [], [], [], [], [], [], []
    R = spec.R_coefficients()
    invs = []
    for n in range(lo, hi + 1):
        cur, prev = triples[n], triples[n - 1]
        a, b = alpha_n(state, n), beta_n(state, n)
        a1, b1 = alpha_n(state, n + 1), beta_n(state, n + 1)
        scale = 1.0 + max(np.max(np.abs(cur.F)), np.max(np.abs(cur.G)), np.max(np.abs(cur.H)))
        zc.append(zero_curvature_residual(prev, cur, a, b)["max"] / scale)
        sb.append(abs(cur.F[0] - 2 * g * a) / scale)
        sb.append(abs(prev.H[1] + 2 * g * b) / scale)
        inv = cur.invariant()
        invs.append(inv)
        rmatch.append(_coef_dev(inv, R))
        h0.append(abs(cur.H[0]) / scale)
        mu_z = sorted_roots(cur.F)
        nu_z = sorted_roots(cur.H[1:])
        sgn = (-1) ** (p + 1)
        r1 = abs(a / a1 - sgn * np.prod(mu_z) / g) / abs(a / a1)
        r2 = abs(b1 / b - sgn * np.prod(nu_z) / g) / abs(b1 / b)
        trace.extend([r1, r2])
        pf = product_formula(state, n)
        prod.append(abs(a * b - pf) / abs(pf))
        if abs(n - state.n0) <= 5:
            flow.append(divisor_flow_residual(state, cur))
    out["zero_curvature"] = residual("zero_curvature", zc, tol["zero_curvature"])
    out["sb"] = residual("sb", sb, tol["sb"])
    out["R_match"] = residual("R_match", rmatch, tol["R_match"])
    invs = np.array(invs)
    drift = [_coef_dev(v, invs[0]) for v in invs]
    out["R_drift"] = residual("R_drift", drift, tol["R_drift"])
    out["H_constant_term"] = residual("H_constant_term", h0, tol["H_constant_term"])
    out["trace"] = residual("trace", trace, tol["trace"])
    out["product"] = residual("product", prod, tol["product"])
    out["divisor_flow"] = residual("divisor_flow", flow, tol["divisor_flow"])

    ba = []
    for P_ in pts[:n_transfer_points]:
        for n in range(max(lo, state.n0 - 5), min(hi, state.n0 + 5) + 1):
            p1, _ = baker_akhiezer(state, P_, n)
            ba.append(abs(p1 - psi1_product(state, P_, n)) / abs(p1))
    out["baker_akhiezer"] = residual("baker_akhiezer", ba, tol["baker_akhiezer"])

    extras = {"growth": state.growth, "growth_modulus": abs(state.growth)}
    if is_unit_circle_symmetric(spec):
        out["quasiperiodicity"] = residual(
            "quasiperiodicity", [abs(abs(state.growth) - 1.0)], tol["quasiperiodicity"]
        )
        extras["re_growth_log"] = state.growth_log.real
    else:
        out["quasiperiodicity"] = Residual(
            "quasiperiodicity", 0.0, 0.0, tol["quasiperiodicity"], skipped=True,
            note="branch points are not unit-circle conjugate pairs",
        )
    return VerificationReport(out, extras)


def genus0_report(spec, sol, tolerances=None, seed=2024):
    """Closed-form checks for genus zero: SB_0, product, transfer."""
    from .hierarchy import LatticeSeq, sb_explicit

    tol = {"sb": 1e-12, "product": 1e-12, "transfer": 1e-12, "eigenrelation": 1e-12}
    tol.update(tolerances or {})
    seq = LatticeSeq(int(sol.sites[0]), sol.alpha, sol.beta)
    g1 = sol.diagnostics["g1"]
    r1, r2 = sb_explicit(seq, 0, g1)
    scale = np.maximum(1.0, np.abs(seq.alpha) + np.abs(np.roll(seq.alpha, -1)))
    sbv = np.concatenate([np.abs(r1 / scale), np.abs(r2) / np.maximum(1.0, np.abs(seq.beta))])
    sbv = sbv[np.isfinite(sbv)]
    prod = np.abs(sol.alpha * sol.beta - sol.diagnostics["alpha_beta"]) / abs(sol.diagnostics["alpha_beta"])
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < 5:
        z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3)) * max(1.0, spec.scale)
        if min(abs(z - e) for e in spec.branch_points) < 0.1 or abs(z) < 0.1:
            continue
        pts.append(point_from_y(spec, z, y_plus(spec, z) * (1 if rng.uniform() < 0.5 else -1)))
    lo, hi = sol.window
    tr, ev = genus0_transfer_residual(spec, sol, pts, (max(lo + 1, sol.n0 - 5), min(hi - 1, sol.n0 + 5)))
    out = {
        "sb": residual("sb", sbv, tol["sb"]),
        "product": residual("product", prod, tol["product"]),
        "transfer": residual("transfer", tr, tol["transfer"]),
        "eigenrelation": residual("eigenrelation", ev, tol["eigenrelation"]),
    }
    return VerificationReport(out, {"g1": g1, "c1": sol.diagnostics["c1"]})

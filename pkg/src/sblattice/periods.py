"""Period matrices and the Riemann theta function."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import contour
from .errors import NonconvergentTau, SingularC


def eta_integrand(p):
    """Integrand of the holomorphic basis ``z**(j-1) dz / y``, ``j = 1..p``."""
    powers = np.arange(p)

    def f(z, y):
        return z[None, :] ** powers[:, None] / y[None, :]

    return f


@dataclass(frozen=True)
class PeriodData:
    """Periods of the holomorphic differentials.

    Attributes
    ----------
    C : ndarray (p, p)
        ``C[j, k] = int_{a_k} z**j dz / y``.
    c : ndarray (p, p)
        ``C^{-1}``; the normalised differentials are
        ``omega_j = sum_l c[j, l] z**l dz / y``.
    B : ndarray (p, p)
        ``B[j, k] = int_{b_k} z**j dz / y``.
    tau : ndarray (p, p)
        Symmetrised ``c @ B``.
    tau_asymmetry : float
        ``max |(c B) - (c B)^T|`` after the integer correction, before
        symmetrisation.
    b_shift : ndarray (p, p) of int
        The polyline b-cycles may intersect one another at shared branch
        points.  The canonical cycle used is
        ``b_i - sum_k b_shift[i, k] a_k``; ``B`` already includes it.
    """

    spec: object
    geometry: object
    homology: object
    C: np.ndarray
    c: np.ndarray
    B: np.ndarray
    tau: np.ndarray
    tau_asymmetry: float
    quad_error: float
    b_shift: np.ndarray

    def b_period(self, integrand, tol=1e-12):
        """Integral of a differential over the canonical b-cycles (length-p axis last)."""
        p = self.genus
        out = []
        a_vals = [contour.integrate(self.spec, self.homology.a[k], integrand, tol)[0] for k in range(p)]
        for i in range(p):
            v, _ = contour.integrate_b_cycle(self.spec, self.homology.b_half[i], integrand, tol)
            for k in range(p):
                if self.b_shift[i, k]:
                    v = v - self.b_shift[i, k] * a_vals[k]
            out.append(v)
        return np.stack(out, axis=-1)

    @property
    def genus(self):
        return self.spec.genus

    def omega_integrand(self):
        """Integrand of the normalised basis ``omega_j``; returns shape (p, n)."""
        eta = eta_integrand(self.genus)
        c = self.c
        return lambda z, y: c @ eta(z, y)


def compute_periods(spec, homology=None, tol=1e-12, geometry=None):
    """a- and b-periods of ``z**(j-1) dz / y`` and the normalised period matrix."""
    p = spec.genus
    if p < 1:
        raise SingularC("genus 0 has no periods")
    geometry = geometry or contour.make_geometry(spec)
    homology = homology or contour.build_homology(spec, geometry)
    f = eta_integrand(p)
    C = np.empty((p, p), dtype=complex)
    B = np.empty((p, p), dtype=complex)
    err = 0.0
    for k in range(p):
        C[:, k], e = contour.integrate(spec, homology.a[k], f, tol)
        err += e
        B[:, k], e = contour.integrate_b_cycle(spec, homology.b_half[k], f, tol)
        err += e
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularC(f"a-period matrix is singular (cond = {cond:.3g})")
    c = np.linalg.inv(C)
    t = c @ B
    # an antisymmetric integer part of c B measures b_i . b_j; remove it
    K = t - t.T
    Kr = np.rint(K.real)
    if np.max(np.abs(K - Kr)) > 1e-6:
        raise SingularC(f"b-period matrix is not symmetric modulo integers ({np.max(np.abs(K - Kr)):.3g})")
    shift = np.triu(-Kr, 1).astype(int)
    B = B - C @ shift.T
    t = c @ B
    asym = float(np.max(np.abs(t - t.T)))
    tau = 0.5 * (t + t.T)
    return PeriodData(spec, geometry, homology, C, c, B, tau, asym, err, shift)


def normalization_residual(periods, tol=1e-12, margin_factor=1.5):
    """``max |int_{a_k} omega_j - delta_jk|`` on stadia with an enlarged margin."""
    spec = periods.spec
    g = periods.geometry
    g2 = contour.Geometry(g.cuts, g.margin * margin_factor, g.radius)
    f = periods.omega_integrand()
    p = spec.genus
    M = np.empty((p, p), dtype=complex)
    for k in range(p):
        M[:, k], _ = contour.integrate(spec, contour.a_cycle(g2, k), f, tol)
    return float(np.max(np.abs(M - np.eye(p))))


def check_tau(tau):
    """Raise :class:`NonconvergentTau` unless ``Im tau`` is positive definite."""
    tau = np.atleast_2d(np.asarray(tau, dtype=complex))
    im = 0.5 * (tau.imag + tau.imag.T)
    lam = np.linalg.eigvalsh(im)
    if lam[0] <= 0:
        raise NonconvergentTau(f"Im tau is not positive definite (min eigenvalue {lam[0]:.3g})")
    return lam[0]


@dataclass(frozen=True)
class ThetaParams:
    """Period matrix plus truncation control.

    ``N`` fixes the sup-norm radius; otherwise it is chosen so that the
    neglected shells are below ``tol`` relative to the dominant term.
    """

    tau: np.ndarray
    tol: float = 1e-14
    N: int | None = None

    def __post_init__(self):
        tau = np.atleast_2d(np.asarray(self.tau, dtype=complex))
        object.__setattr__(self, "tau", tau)
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.N is not None and self.N < 1:
            raise ValueError("N must be >= 1")
        check_tau(tau)

    @property
    def genus(self):
        return self.tau.shape[0]

    def radius(self):
        """Sup-norm radius adequate for lattice-reduced arguments."""
        if self.N is not None:
            return self.N
        im = self.tau.imag
        lam = np.linalg.eigvalsh(0.5 * (im + im.T))[0]
        p = self.genus
        # reduced arguments satisfy Im z = Im(tau) y with |y_j| <= 1/2
        shift = 0.5 * np.sqrt(p)
        extra = 0.25 * np.max(np.abs(np.linalg.eigvalsh(im))) * p
        need = np.log(1.0 / self.tol) / np.pi + extra
        r = shift + np.sqrt(need / lam) + 1.0
        return int(np.ceil(r))


_LATTICE_CACHE = {}


def _lattice(p, N):
    key = (p, N)
    if key not in _LATTICE_CACHE:
        pts = np.array(list(itertools.product(range(-N, N + 1), repeat=p)), dtype=float)
        # shell order: sup norm, then lexicographic, for a fixed reduction order
        order = np.lexsort(pts.T[::-1].tolist() + [np.max(np.abs(pts), axis=1)])
        _LATTICE_CACHE[key] = pts[order]
    return _LATTICE_CACHE[key]


def reduce_argument(z, tau):
    """Split ``z = z' + m + tau n`` with ``z'`` in the fundamental cell.

    Returns ``(z', m, n)``; ``m`` and ``n`` are integer vectors obtained by
    rounding the real coordinates of ``z`` in the basis (I, tau).
    """
    z = np.asarray(z, dtype=complex)
    tau = np.atleast_2d(tau)
    n = np.rint(np.linalg.solve(tau.imag, z.imag.T).T)
    z1 = z - n @ tau.T
    m = np.rint(z1.real)
    return z1 - m, m, n


def theta_sum(z, params):
    """Raw truncated lattice sum, no reduction; ``z`` of shape (..., p)."""
    z = np.asarray(z, dtype=complex)
    tau = params.tau
    p = params.genus
    lat = _lattice(p, params.radius())
    quad = np.einsum("ki,ij,kj->k", lat, tau, lat)
    lin = z.reshape(-1, p) @ lat.T
    vals = np.exp(2j * np.pi * lin + 1j * np.pi * quad[None, :])
    return vals.sum(axis=1).reshape(z.shape[:-1])


def theta_log(z, params):
    """Theta with lattice reduction.

    Returns ``(log_factor, value)`` with ``theta(z) = exp(log_factor) * value``,
    so that large quasi-periodicity factors never overflow.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    p = params.genus
    if shape[-1] != p:
        raise ValueError(f"argument must have trailing dimension {p}")
    zz = z.reshape(-1, p)
    zr, m, n = reduce_argument(zz, params.tau)
    val = theta_sum(zr, params)
    logf = -2j * np.pi * np.sum(n * zr, axis=1) - 1j * np.pi * np.einsum(
        "ki,ij,kj->k", n, params.tau, n
    )
    return logf.reshape(shape[:-1]), val.reshape(shape[:-1])


def theta_magnitude(z, params):
    """``(log_factor, value, abs_sum)`` where ``abs_sum`` sums the term moduli.

    ``|value| / abs_sum`` measures how close the reduced argument is to a
    zero of theta on the scale of the series itself.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    p = params.genus
    zz = z.reshape(-1, p)
    zr, m, n = reduce_argument(zz, params.tau)
    lat = _lattice(p, params.radius())
    quad = np.einsum("ki,ij,kj->k", lat, params.tau, lat)
    terms = np.exp(2j * np.pi * (zr @ lat.T) + 1j * np.pi * quad[None, :])
    logf = -2j * np.pi * np.sum(n * zr, axis=1) - 1j * np.pi * np.einsum("ki,ij,kj->k", n, params.tau, n)
    return (
        logf.reshape(shape[:-1]),
        terms.sum(axis=1).reshape(shape[:-1]),
        np.abs(terms).sum(axis=1).reshape(shape[:-1]),
    )


def theta(z, params):
    """Riemann theta ``sum_n exp(2 pi i (n, z) + pi i (n, tau n))``.

    ``z`` may be a single p-vector or an array of shape (..., p).  For integer
    ``n`` the conjugation in the scalar product ``(u, v) = sum conj(u_j) v_j``
    is immaterial.
    """
    logf, val = theta_log(z, params)
    out = np.exp(logf) * val
    return out.item() if np.ndim(out) == 0 else out


def theta_ratio(z1, z2, params):
    """``theta(z1) / theta(z2)`` computed through reduced arguments."""
    l1, v1 = theta_log(z1, params)
    l2, v2 = theta_log(z2, params)
    out = np.exp(l1 - l2) * v1 / v2
    return out.item() if np.ndim(out) == 0 else out


def tail_bound(params):
    """Upper bound on the relative contribution of lattice points outside the truncation."""
    im = params.tau.imag
    lam = np.linalg.eigvalsh(0.5 * (im + im.T))[0]
    N = params.radius()
    p = params.genus
    r = N + 1 - 0.5 * np.sqrt(p)
    if r <= 0:
        return np.inf
    extra = 0.25 * np.max(np.abs(np.linalg.eigvalsh(im))) * p
    # count of points per shell grows like (2k+1)^p; sum a few shells explicitly
    tot = 0.0
    for k in range(N + 1, N + 40):
        rk = k - 0.5 * np.sqrt(p)
        tot += ((2 * k + 1) ** p) * np.exp(-np.pi * lam * rk * rk + np.pi * extra)
    return float(tot)

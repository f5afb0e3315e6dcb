"""Theta-function representation of finite-gap solutions.

Notation.  ``A(P)`` is the Abel image along the registry path from ``Q0``,
``I_s(P)`` the integral of the third-kind differential ``Omega_s`` along the
same path, and for a divisor class with Abel image ``rho`` at ``n0``

    z(P, D(n)) = Xi - A(P) + rho_D + (n - n0) Delta.

With ``Q(P, n) = theta(z(P, nu(n))) / theta(z(P, mu(n)))`` the function

    phi(P, n) = C(n) Q(P, n) exp(I_-(P))

has divisor ``P0- + nu(n) - P_inf- - mu(n)``.  ``Delta`` and ``rho_nu - rho_mu``
are fixed by requiring ``phi`` and ``psi_1`` to be single valued on the
cut surface, i.e. ``Delta = -v_+`` and ``rho_nu - rho_mu = -v_-`` modulo
``Z^p`` where ``v_s`` are the b-periods of ``Omega_s / (2 pi i)``.  Both agree
with ``A(P_inf+) - A(P0-)`` and ``A(P_inf-) - A(P0-)`` up to the lattice
vectors reported by :func:`sblattice.abelian.b_period_relation`.

The ratio ``C(n+1) / C(n)`` follows from matching the expansions of ``phi``
at two pairs of points (``P0+`` at ``n+1`` against ``P_inf-`` at ``n``, and
``P_inf+`` at ``n+1`` against ``P0-`` at ``n``); the two values must agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abelian import (
    b_period_relation,
    build_abelian,
    log_constant_identity,
    reduce_mod_lattice,
    riemann_constants,
)
from .curve import curve_residual, p_zero
from .errors import (
    EqualBranchPoints,
    GenusTooSmall,
    InvalidInitialData,
    PoleOfPhi,
    SelfCheckFailed,
    SpecialDivisor,
    ThetaNearZero,
    ZeroAlpha0,
)
from .hierarchy import is_special
from .periods import ThetaParams, theta_magnitude

DEFAULT_TOLERANCES = {
    "quadrature": 1e-12,
    "theta": 1e-14,
    "self_check": 1e-8,
    "b_period": 1e-7,
    "recurrence": 1e-8,
    "theta_zero": 1e-12,
}

POINTS = ("0+", "0-", "inf+", "inf-")


@dataclass(frozen=True)
class SolutionState:
    """Everything needed to evaluate ``alpha``, ``beta``, ``phi`` and ``Psi``.

    ``growth`` is ``C(n+1) / C(n)`` and ``growth_log`` its principal
    logarithm; ``alpha(n)`` carries ``exp(-(n - n0) growth_log)``.
    """

    spec: object
    stack: object
    params: ThetaParams
    riemann: object
    n0: int
    alpha0: complex
    beta0: complex
    mu_hat: tuple
    rho_mu: np.ndarray
    rho_nu: np.ndarray
    delta: np.ndarray
    nu_shift: np.ndarray
    omega0: dict
    growth: complex
    growth_log: complex
    growth_alt: complex
    lattice_shifts: dict
    checks: dict
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @property
    def genus(self):
        return self.spec.genus

    @property
    def Xi(self):
        return self.riemann.Xi

    @property
    def tau(self):
        return self.stack.tau


@dataclass(frozen=True)
class ThetaArguments:
    """Abel images of ``D_mu(n)``, ``D_nu(n)`` and the theta arguments at ``n``.

    ``z[(name, 'mu')]`` is ``z(P_name, mu(n))``; ``reduced`` holds the
    lattice reduction ``(z', m, k)`` with ``z = z' + m + tau k``.
    """

    n: int
    abel_mu: np.ndarray
    abel_nu: np.ndarray
    z: dict
    reduced: dict


@dataclass(frozen=True)
class LatticeSolution:
    n0: int
    sites: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    diagnostics: dict

    @property
    def window(self):
        return int(self.sites[0]), int(self.sites[-1])

    def at(self, n):
        i = int(n - self.sites[0])
        return self.alpha[i], self.beta[i]


# --------------------------------------------------------------------------
# construction


def _check_mu(spec, mu_hat):
    pts = list(mu_hat)
    if len(pts) != spec.genus:
        raise InvalidInitialData(f"need {spec.genus} divisor points, got {len(pts)}")
    for P in pts:
        if P.infinite:
            raise InvalidInitialData("divisor points must be finite")
        if abs(P.z) == 0:
            raise InvalidInitialData("divisor points must avoid z = 0")
        if curve_residual(spec, P) > 1e-8:
            raise InvalidInitialData(f"{P} is not on the curve")
    special, witness = is_special(pts, spec.scale)
    if special:
        raise SpecialDivisor("divisor is special", witness=[repr(w) for w in witness])
    return tuple(pts)


def init_solution(spec, mu_hat, alpha0, n0=0, tolerances=None, stack=None):
    """Build the solution state from ``(curve, mu(n0), alpha(n0))``.

    ``beta(n0)`` and the Abel image of ``D_nu(n0)`` are derived.  The log
    constant identity and the b-period relation are validated first.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    if spec.genus < 1:
        raise GenusTooSmall("use genus0_solution for two branch points")
    alpha0 = complex(alpha0)
    if alpha0 == 0:
        raise ZeroAlpha0("alpha(n0) must be nonzero")
    mu = _check_mu(spec, mu_hat)
    stack = stack or build_abelian(spec, tol["quadrature"])
    p = spec.genus

    ident = log_constant_identity(stack)
    if max(ident.values()) > tol["self_check"]:
        raise SelfCheckFailed("log-constant identity violated", residual=max(ident.values()))
    rel = b_period_relation(stack)
    worst = max(rel[s][1] for s in rel)
    if worst > tol["b_period"]:
        raise SelfCheckFailed("b-period relation violated", residual=worst)

    tau = stack.tau
    A = {k: stack.abel(stack.special_point(k)) for k in POINTS}
    delta = A["inf+"] - A["0-"] - tau @ rel[1][2]
    nu_shift = A["inf-"] - A["0-"] - tau @ rel[-1][2]
    rho_mu = sum(stack.abel(P) for P in mu)
    rho_nu = rho_mu + nu_shift
    params = ThetaParams(tau, tol["theta"])
    riemann = riemann_constants(stack)
    omega0 = {1: stack.omega0(1), -1: stack.omega0(-1)}

    base = _Frame(riemann.Xi, A, rho_mu, rho_nu, delta, n0, params)
    w = omega0[-1]
    # P0+ at n+1 against P_inf- at n, and P_inf+ at n+1 against P0- at n
    g_f = -np.exp(w["inf-"] - w["0+"]) * base.Q("inf-", n0) / base.Q("0+", n0 + 1)
    g_e = -np.exp(w["0-"] - w["inf+"]) * base.Q("0-", n0) / base.Q("inf+", n0 + 1)
    rec = abs(g_e - g_f) / abs(g_e)
    if rec > tol["recurrence"]:
        raise SelfCheckFailed("the two recurrences for C(n) disagree", residual=rec)

    beta0 = np.exp(w["inf+"] - w["0+"]) * base.Q("inf+", n0) / base.Q("0+", n0) / alpha0
    checks = {
        "log_constant_identity": ident,
        "b_period_relation": {s: rel[s][1] for s in rel},
        "recurrence_mismatch": rec,
        "riemann_method": riemann.method,
        "riemann_vanishing_ratio": riemann.vanishing_ratio,
        "kappa_e": complex(g_e / (-np.exp(w["0-"] - w["inf+"]))),
        "kappa_f": complex(g_f / (-np.exp(w["inf-"] - w["0+"]))),
    }
    return SolutionState(
        spec=spec,
        stack=stack,
        params=params,
        riemann=riemann,
        n0=int(n0),
        alpha0=alpha0,
        beta0=complex(beta0),
        mu_hat=mu,
        rho_mu=rho_mu,
        rho_nu=rho_nu,
        delta=delta,
        nu_shift=nu_shift,
        omega0=omega0,
        growth=complex(g_e),
        growth_log=complex(np.log(g_e)),
        growth_alt=complex(g_f),
        lattice_shifts={s: rel[s][2] for s in rel},
        checks=checks,
        tolerances=tol,
    )


@dataclass(frozen=True)
class _Frame:
    """Theta arguments without the rest of the state (used during init)."""

    Xi: np.ndarray
    A: dict
    rho_mu: np.ndarray
    rho_nu: np.ndarray
    delta: np.ndarray
    n0: int
    params: ThetaParams

    def z(self, AP, which, n):
        rho = self.rho_mu if which == "mu" else self.rho_nu
        return self.Xi - AP + rho + (n - self.n0) * self.delta

    def theta(self, AP, which, n, zero_tol=None, what=""):
        logf, val, scale = theta_magnitude(self.z(AP, which, n), self.params)
        if zero_tol is not None and abs(val) <= zero_tol * scale:
            raise ThetaNearZero(f"theta vanishes at {what} (n = {n})", n=n, ratio=float(abs(val) / scale))
        return complex(logf), complex(val)

    def Q_at(self, AP, n, zero_tol=None, what=""):
        ln, vn = self.theta(AP, "nu", n)
        lm, vm = self.theta(AP, "mu", n, zero_tol, what)
        return np.exp(ln - lm) * vn / vm

    def Q(self, name, n, zero_tol=None):
        return self.Q_at(self.A[name], n, zero_tol, name)


def _frame(state):
    A = {k: state.stack.abel(state.stack.special_point(k)) for k in POINTS}
    return _Frame(state.Xi, A, state.rho_mu, state.rho_nu, state.delta, state.n0, state.params)


# --------------------------------------------------------------------------
# evaluation


def theta_arguments(state, n):
    """Abel images of both divisors at ``n`` and the arguments ``z(P, D(n))``."""
    fr = _frame(state)
    k = n - state.n0
    abel_mu = state.rho_mu + k * state.delta
    abel_nu = state.rho_nu + k * state.delta
    z = {}
    red = {}
    for name in POINTS:
        for which in ("mu", "nu"):
            v = fr.z(fr.A[name], which, n)
            z[(name, which)] = v
            red[(name, which)] = reduce_mod_lattice(v, state.tau)
    return ThetaArguments(n, abel_mu, abel_nu, z, red)


def alpha_n(state, n):
    """``alpha(n) = alpha0 growth^{-(n - n0)} Q(P0+, n0) / Q(P0+, n)``."""
    if n == state.n0:
        return state.alpha0
    fr = _frame(state)
    zt = state.tolerances["theta_zero"]
    q0 = fr.Q("0+", state.n0)
    qn = _denominator_checked(fr, "0+", n, zt)
    return state.alpha0 * np.exp(-(n - state.n0) * state.growth_log) * q0 / qn


def beta_n(state, n):
    """``beta(n) = beta0 growth^{n - n0} Q(P_inf+, n) / Q(P_inf+, n0)``."""
    if n == state.n0:
        return state.beta0
    fr = _frame(state)
    zt = state.tolerances["theta_zero"]
    q0 = fr.Q("inf+", state.n0)
    qn = fr.Q("inf+", n, zt)
    return state.beta0 * np.exp((n - state.n0) * state.growth_log) * qn / q0


def _denominator_checked(fr, name, n, zt):
    # alpha has theta(z(P0+, nu(n))) in the denominator
    ln, vn = fr.theta(fr.A[name], "nu", n, zt, name)
    lm, vm = fr.theta(fr.A[name], "mu", n)
    return np.exp(ln - lm) * vn / vm


def product_formula(state, n):
    """``alpha(n) beta(n)`` from the four-theta expression, evaluated independently."""
    fr = _frame(state)
    w = state.omega0[-1]
    l1, v1 = fr.theta(fr.A["0+"], "mu", n)
    l2, v2 = fr.theta(fr.A["inf+"], "nu", n)
    l3, v3 = fr.theta(fr.A["0+"], "nu", n)
    l4, v4 = fr.theta(fr.A["inf+"], "mu", n)
    return np.exp(w["inf+"] - w["0+"] + l1 + l2 - l3 - l4) * (v1 * v2) / (v3 * v4)


def solve_window(state, n_min, n_max):
    """``alpha`` and ``beta`` on ``n_min..n_max`` with product-formula residuals."""
    sites = np.arange(n_min, n_max + 1)
    a = np.array([alpha_n(state, int(n)) for n in sites])
    b = np.array([beta_n(state, int(n)) for n in sites])
    prod = np.array([product_formula(state, int(n)) for n in sites])
    resid = np.abs(a * b - prod) / np.abs(prod)
    return LatticeSolution(state.n0, sites, a, b, {"product": resid})


def C_n(state, n):
    """The constant ``C(n)`` of ``phi``."""
    fr = _frame(state)
    w = state.omega0[-1]
    c0 = 1.0 / (state.alpha0 * fr.Q("0+", state.n0) * np.exp(w["0+"]))
    return c0 * np.exp((n - state.n0) * state.growth_log)


def phi(state, P, n):
    """The function ``phi(P, n)``; limits are returned at ``P0+-`` and ``P_inf+``."""
    if P.infinite:
        if P.sheet < 0:
            raise PoleOfPhi("phi has a pole at P_inf-")
        return beta_n(state, n)
    if P.z == 0:
        if P.sheet == p_zero(state.spec, 1).sheet:
            return 1.0 / alpha_n(state, n)
        return 0.0j
    fr = _frame(state)
    AP = state.stack.abel(P)
    try:
        q = fr.Q_at(AP, n, state.tolerances["theta_zero"], repr(P))
    except ThetaNearZero as exc:
        raise PoleOfPhi(f"{P} is a pole of phi at n = {n}") from exc
    I_minus = state.stack.omega3(P, -1)
    return C_n(state, n) * q * np.exp(I_minus)


def baker_akhiezer(state, P, n, n0=None):
    """``(psi_1, psi_2)`` at a finite generic point ``P``.

    ``psi_2`` is evaluated from its own theta expression, so ``psi_2 / psi_1``
    against :func:`phi` is a genuine check.
    """
    n0 = state.n0 if n0 is None else n0
    if P.infinite or P.z == 0:
        raise ValueError("baker_akhiezer needs a finite point away from z = 0")
    fr = _frame(state)
    AP = state.stack.abel(P)
    w_plus = state.omega0[1]
    Ip = state.stack.omega3(P, 1)
    Im = state.stack.omega3(P, -1)
    l_pn, v_pn = fr.theta(AP, "mu", n)
    l_p0, v_p0 = fr.theta(AP, "mu", n0)
    l_in0, v_in0 = fr.theta(fr.A["inf+"], "mu", n0)
    l_in, v_in = fr.theta(fr.A["inf+"], "mu", n)
    # C(n, n0)
    lc = -(n - n0) * w_plus["inf+"] + l_in0 - l_in
    cnn0 = np.exp(lc) * v_in0 / v_in
    psi1 = cnn0 * np.exp(l_pn - l_p0 + (n - n0) * Ip) * v_pn / v_p0
    l_nu, v_nu = fr.theta(AP, "nu", n)
    psi2 = C_n(state, n) * cnn0 * np.exp(l_nu - l_p0 + Im + (n - n0) * Ip) * v_nu / v_p0
    return complex(psi1), complex(psi2)


def psi1_product(state, P, n, n0=None):
    """``psi_1`` from the finite product over ``z + alpha(m) phi(P, m-1)``."""
    n0 = state.n0 if n0 is None else n0
    z = P.z
    out = 1.0 + 0j
    if n > n0:
        for m in range(n0 + 1, n + 1):
            out *= z + alpha_n(state, m) * phi(state, P, m - 1)
    elif n < n0:
        for m in range(n + 1, n0 + 1):
            out /= z + alpha_n(state, m) * phi(state, P, m - 1)
    return out


def riccati_residual(state, P, n):
    """``|alpha phi phi^- - phi^- + z phi - z beta|`` scaled by the size of the terms."""
    z = P.z
    a = alpha_n(state, n)
    b = beta_n(state, n)
    f = phi(state, P, n)
    fm = phi(state, P, n - 1)
    terms = [a * f * fm, fm, z * f, z * b]
    return abs(terms[0] - terms[1] + terms[2] - terms[3]) / max(abs(t) for t in terms)


# --------------------------------------------------------------------------
# genus zero


def genus0_solution(E0, E1, g_sign=1, alpha0=1.0, window=(-10, 10), n0=0):
    """Closed-form solution for two branch points.

    ``alpha(n) = alpha0 (-g_1)^{n - n0}``, ``beta(n) = beta0 (-g_1)^{n0 - n}``
    with ``g_1 = g_sign sqrt(E0 E1)``, ``c_1 = -(E0 + E1) / 2`` and
    ``alpha beta = (1 - c_1 / g_1) / 2``.
    """
    E0, E1 = complex(E0), complex(E1)
    if E0 == 0 or E1 == 0:
        raise InvalidInitialData("branch points must be nonzero")
    if abs(E0 - E1) <= 1e-12 * max(abs(E0), abs(E1)):
        raise EqualBranchPoints("E0 = E1 forces alpha beta in {0, 1}")
    alpha0 = complex(alpha0)
    if alpha0 == 0:
        raise ZeroAlpha0("alpha(n0) must be nonzero")
    g1 = g_sign * np.lib.scimath.sqrt(E0 * E1)
    g1 = complex(g1)
    c1 = -(E0 + E1) / 2
    ab = (1 - c1 / g1) / 2
    beta0 = ab / alpha0
    sites = np.arange(window[0], window[1] + 1)
    r = -g1
    a = np.array([alpha0 * r ** int(n - n0) for n in sites])
    b = np.array([beta0 * r ** int(n0 - n) for n in sites])
    return LatticeSolution(
        n0, sites, a, b, {"g1": g1, "c1": c1, "alpha_beta": ab, "beta0": beta0}
    )


__all__ = [
    "SolutionState",
    "ThetaArguments",
    "LatticeSolution",
    "init_solution",
    "theta_arguments",
    "alpha_n",
    "beta_n",
    "product_formula",
    "solve_window",
    "C_n",
    "phi",
    "baker_akhiezer",
    "psi1_product",
    "riccati_residual",
    "genus0_solution",
]

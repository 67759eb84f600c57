"""Zero-energy scattering for the exponential potential.

In the variable x = r/R0 the reduced radial equation reads u'' = g e^(-x) u with
g = a0/(2 R0), u(0) = 0, and u ~ (x - a/R0) beyond the range of the potential.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import mpmath as mp
import numpy as np
from scipy import integrate

from .potentials import ConvergenceError, ParameterError, PotentialParams, nu_hat

METHODS = ("shooting", "closed_form_oracle", "born")


@dataclass
class ScatteringSolution:
    a: float
    method: str
    born_terms: list = field(default_factory=list)
    residual: float = 0.0


# ---------------------------------------------------------------- Bessel oracle

def scattering_length_closed_form(p: PotentialParams, dps: int = 40) -> float:
    """a from the modified-Bessel solution u = c1 I0(z) + c2 K0(z), z = 2 sqrt(g) e^(-x/2)."""
    with mp.workdps(dps):
        z0 = mp.sqrt(2 * mp.mpf(p.a0) / mp.mpf(p.R0))
        ratio = 2 * (mp.besselk(0, z0) / mp.besseli(0, z0) + mp.log(z0 / 2) + mp.euler)
        return float(ratio * mp.mpf(p.R0))


# ---------------------------------------------------------------- shooting

def _shoot(g: float, x_max: float, tol: float):
    # state (u, u', q) with q = x u' - u; q' = x u'' = g x e^-x u, so a/R0 = q/u' without cancellation
    def rhs(x, y):
        w = g * np.exp(-x) * y[0]
        return [y[1], w, x * w]

    sol = integrate.solve_ivp(rhs, (0.0, x_max), [0.0, 1.0, 0.0], method="DOP853",
                              rtol=min(1e-13, tol * 1e-3), atol=1e-16, dense_output=True)
    if not sol.success:
        raise ConvergenceError(f"shooting integration failed: {sol.message}")
    return sol


def _tail_fit_residual(sol, x_max: float, a_scaled: float) -> float:
    # u should equal u'(inf) (x - a/R0) on the force-free tail
    xs = np.linspace(0.75 * x_max, x_max, 64)
    u, up = sol.sol(xs)[0], sol.sol(xs)[1]
    slope, intercept = np.polyfit(xs, u, 1)
    fit_a = -intercept / slope
    lin = np.max(np.abs(u - up[-1] * (xs - a_scaled))) / abs(up[-1] * x_max)
    return max(lin, abs(fit_a - a_scaled) / max(abs(a_scaled), 1e-300) * 1e-3)


def scattering_length_shooting(p: PotentialParams, tol: float = 1e-10) -> ScatteringSolution:
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    g = p.a0 / (2 * p.R0)
    x_max = max(40.0, 10 * np.log(1 / tol))
    sol = _shoot(g, x_max, tol)
    u, up, q = sol.y[:, -1]
    a_scaled = q / up
    residual = _tail_fit_residual(sol, x_max, a_scaled)
    if residual > max(tol, 1e-12) * 1e3:
        raise ConvergenceError(f"tail is not linear (residual {residual:.3g})", residual)
    return ScatteringSolution(a_scaled * p.R0, "shooting", residual=residual)


# ---------------------------------------------------------------- Born series

class _ExpPoly:
    """Exact sum of c * x^j * exp(-k x) over (k, j); coefficients are Fractions."""

    def __init__(self, terms=None):
        self.terms = {key: Fraction(v) for key, v in (terms or {}).items() if v != 0}

    def shift(self, dk=0, dj=0) -> "_ExpPoly":
        return _ExpPoly({(k + dk, j + dj): c for (k, j), c in self.terms.items()})

    def __add__(self, other):
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + c
        return _ExpPoly(out)

    def scale(self, f) -> "_ExpPoly":
        return _ExpPoly({key: c * f for key, c in self.terms.items()})

    def moment(self) -> Fraction:
        """int_0^inf of the function (all terms must decay)."""
        total = Fraction(0)
        for (k, j), c in self.terms.items():
            if k <= 0:
                raise ValueError("non-decaying term in moment")
            total += c * Fraction(factorial(j), k ** (j + 1))
        return total

    def primitive(self) -> "_ExpPoly":
        """int_0^x of the function, as a function of x."""
        out = _ExpPoly()
        for (k, j), c in self.terms.items():
            if k == 0:
                out = out + _ExpPoly({(0, j + 1): c / (j + 1)})
                continue
            base = c * Fraction(factorial(j), k ** (j + 1))
            piece = {(0, 0): base}
            for i in range(j + 1):
                piece[(k, i)] = piece.get((k, i), 0) - base * Fraction(k ** i, factorial(i))
            out = out + _ExpPoly(piece)
        return out


def born_moments(order: int) -> tuple[list[Fraction], list[Fraction]]:
    """Asymptotic slope c_n and intercept q_n of each iterate u_n -> c_n x - q_n.

    u_0 = x and u_n(x) = int_0^x (x - s) e^(-s) u_{n-1}(s) ds.
    """
    u = _ExpPoly({(0, 1): 1})
    cs, qs = [Fraction(1)], [Fraction(0)]
    for _ in range(order):
        w = u.shift(dk=1)                # e^-s u_{n-1}
        sw = w.shift(dj=1)               # s e^-s u_{n-1}
        cs.append(w.moment())
        qs.append(sw.moment())
        u = w.primitive().shift(dj=1) + sw.primitive().scale(-1)
    return cs, qs


def _series_quotient(num, den, order):
    out = []
    for n in range(order + 1):
        acc = num[n] - sum(out[m] * den[n - m] for m in range(n))
        out.append(acc / den[0])
    return out


def born_series_coefficients(order: int) -> list[Fraction]:
    """Exact b_n with a/R0 = sum_n b_n (a0/R0)^n, n = 1..order."""
    cs, qs = born_moments(order)
    quot = _series_quotient(qs, cs, order)          # in powers of g = (a0/R0)/2
    return [quot[n] / 2 ** n for n in range(1, order + 1)]


def a1_closed_form(p: PotentialParams, literal: bool = False) -> float:
    """First Born correction: -(5/16) a0^2/R0, or the -(5 pi/16) a0^2/R0 value of the printed formula."""
    val = -5.0 / 16.0 * p.a0 ** 2 / p.R0
    return val * np.pi if literal else val


def a1_quadrature(p: PotentialParams, literal: bool = False) -> tuple[float, float]:
    """Momentum-space a1: -(1/128 pi^3) int d^3k nu^2/k^2 (literal) or with d^3k/(2 pi)^3 normalization.

    The physical normalization carries one more factor 1/pi.
    """
    val, err = _a1_radial(p)
    pref = -4 * np.pi / (128 * np.pi ** 3)
    if not literal:
        pref /= np.pi
    return pref * val, abs(pref) * err


def _a1_radial(p):
    # int_0^inf nu(k)^2 dk split at the range scale; the k^-8 tail is integrated in 1/k
    kc = 1.0 / p.R0
    f = lambda k: float(nu_hat(k, p)) ** 2
    v1, e1 = integrate.quad(f, 0, kc, epsabs=0, epsrel=1e-13, limit=200)
    v2, e2 = integrate.quad(lambda w: f(1 / w) / w ** 2, 0, 1 / kc, epsabs=0, epsrel=1e-13, limit=200)
    return v1 + v2, e1 + e2


def born_coefficients(p: PotentialParams, order: int = 2) -> list[float]:
    """[a0, a1, a2, ...] as lengths, with a1 cross-checked against momentum quadrature."""
    if order < 1:
        raise ParameterError("order must be >= 1")
    p.require_weak()
    r = p.ratio
    coeffs = born_series_coefficients(order)
    terms = [float(b) * r ** (n + 1) * p.R0 for n, b in enumerate(coeffs)]
    if order >= 2:
        q, err = a1_quadrature(p)
        if abs(q - terms[1]) > max(1e-9 * abs(terms[1]), 10 * err):
            raise ConvergenceError(f"a1 quadrature {q} disagrees with series {terms[1]}",
                                   abs(q - terms[1]) / abs(terms[1]))
    return terms


def scattering_length(p: PotentialParams, method: str = "shooting", tol: float = 1e-10,
                      born_order: int = 2) -> ScatteringSolution:
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}")
    terms = born_coefficients(p, born_order) if p.weak else []
    if method == "shooting":
        sol = scattering_length_shooting(p, tol)
    elif method == "closed_form_oracle":
        sol = ScatteringSolution(scattering_length_closed_form(p), method)
    else:
        # sum the series until the next term drops below tol * a0
        order = born_order
        while True:
            terms = born_coefficients(p, order)
            if abs(terms[-1]) < tol * p.a0 or order >= 60:
                break
            order = min(2 * order, 60)
        sol = ScatteringSolution(float(sum(terms)), method, residual=abs(terms[-1]) / p.a0)
        if sol.residual > tol:
            raise ConvergenceError("Born series did not converge to tol", sol.residual)
    sol.born_terms = terms
    return sol

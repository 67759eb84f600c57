"""Variational Bogoliubov upper bound for the dilute gas.

Units: the kinetic energy is k^2 and the interaction has Fourier transform nu_hat.
Momentum integrals are over d^3k/(2 pi)^3 unless noted.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .potentials import (ConvergenceError, ParameterError, PotentialParams, RadialFunction,
                         nu_hat)

LHY_COEFFICIENT = 128.0 / (15.0 * np.sqrt(np.pi))
# J = -a1/a0 - LHY_COEFFICIENT * sqrt(Y) + o(sqrt(Y)); energy/(4 pi rho a0) = 1 - J
SIGN_CONVENTION = "J = -a1/a0 - (128/(15 sqrt(pi))) sqrt(Y); energy/(4 pi rho a0) = 1 - J"
BORN_CONSTANT = 5.0 / 16.0   # |a1|/a0 in units of a0/R0


def phonon_scale(rho: float, p: PotentialParams) -> float:
    """sqrt(rho nu(0)), the momentum where k^2 meets the interaction energy."""
    return float(np.sqrt(rho * 8 * np.pi * p.a0))


def radial_integral(func: Callable, scales, epsrel: float = 1e-11) -> tuple[float, float]:
    """int d^3k/(2 pi)^3 func(|k|) with the k axis split at the given momentum scales."""
    pts = sorted({float(s) for s in scales if s > 0})
    edges = [0.0] + pts
    g = lambda k: k * k * float(func(k))
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(g, lo, hi, epsabs=0, epsrel=epsrel, limit=400)
        val += v
        err += e
    # tail in w = 1/k so the decaying power law becomes a regular integrand
    top = edges[-1]
    v, e = integrate.quad(lambda w: g(1.0 / w) / (w * w), 0, 1.0 / top, epsabs=0,
                          epsrel=epsrel, limit=400)
    val += v
    err += e
    c = 1.0 / (2 * np.pi ** 2)
    return c * val, c * err


def _scales(rho, p):
    kp = phonon_scale(rho, p)
    return [kp / 10, kp, 10 * kp, 1 / p.R0, 10 / p.R0]


@dataclass
class TrialFunction:
    """psi(k) with exact callables for sinh^2 psi and sinh psi cosh psi, sampled on a grid."""
    k: np.ndarray
    psi_fn: Callable
    sinh2_fn: Callable
    sc_fn: Callable
    psi: RadialFunction = field(init=False)
    sinh2: RadialFunction = field(init=False)
    sc: RadialFunction = field(init=False)

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=float)
        self.psi = RadialFunction(self.k, self.psi_fn(self.k), low_power=-1.0)
        self.sinh2 = RadialFunction(self.k, self.sinh2_fn(self.k), low_power=-1.0, tail_power=8.0)
        self.sc = RadialFunction(self.k, self.sc_fn(self.k), low_power=-1.0, tail_power=6.0)

    @classmethod
    def from_psi(cls, k, psi_fn: Callable) -> "TrialFunction":
        return cls(k, psi_fn, lambda q: np.sinh(psi_fn(q)) ** 2,
                   lambda q: np.sinh(psi_fn(q)) * np.cosh(psi_fn(q)))

    @classmethod
    def zero(cls, k) -> "TrialFunction":
        z = lambda q: np.zeros_like(np.asarray(q, dtype=float))
        return cls(k, z, z, z)

    def scaled(self, factor: float) -> "TrialFunction":
        base = self.psi_fn
        return TrialFunction.from_psi(self.k, lambda q: factor * base(q))

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.psi.values == 0))


def default_grid(rho: float, p: PotentialParams, n: int = 400) -> np.ndarray:
    kp = phonon_scale(rho, p)
    return np.geomspace(kp * 1e-3, max(10 / p.R0, 100 * kp) * 10, n)


def optimal_psi(rho: float, p: PotentialParams, grid=None, tol: float = 1e-6) -> TrialFunction:
    """Minimizer of the quadratic part: psi = (1/2) atanh(rho nu / (k^2 + rho nu))."""
    if not rho > 0:
        raise ParameterError("rho must be positive")
    k = default_grid(rho, p) if grid is None else np.asarray(grid, dtype=float)
    nu0 = 8 * np.pi * p.a0
    if k[-1] * p.R0 < 10:
        raise ParameterError(f"grid must reach k R0 >= 10, got {k[-1] * p.R0:.3g}")
    if k[0] ** 2 > rho * nu0 / 100:
        raise ParameterError("grid must start below the phonon scale: k_min^2 <= rho nu(0)/100")

    def psi_fn(q):
        q = np.asarray(q, dtype=float)
        w = rho * nu_hat(q, p)
        # (1/2) atanh(x) with 1 - x = k^2/A, 1 + x = (A + rho nu)/A
        return 0.25 * np.log1p(2 * w / q ** 2)

    def sinh2_fn(q):
        q = np.asarray(q, dtype=float)
        w = rho * nu_hat(q, p)
        A = q * q + w
        E = np.sqrt(q ** 4 + 2 * w * q * q)
        return 0.5 * w * w / ((A + E) * E)

    def sc_fn(q):
        q = np.asarray(q, dtype=float)
        w = rho * nu_hat(q, p)
        return 0.5 * w / np.sqrt(q ** 4 + 2 * w * q * q)

    tf = TrialFunction(k, psi_fn, sinh2_fn, sc_fn)
    total, _ = radial_integral(sinh2_fn, _scales(rho, p))
    tail, _ = radial_integral(lambda q: sinh2_fn(q) if q > k[-1] else 0.0, [k[-1]])
    if total > 0 and tail / total > tol:
        raise ParameterError(f"grid too narrow: tail mass fraction {tail / total:.3g} > {tol}")
    return tf


# ---------------------------------------------------------------- convolutions

def radial_convolution(F: Callable, k: float, inner: Callable, scales=(), epsrel=1e-10):
    """int d^3q/(2 pi)^3 G(|k - q|) F(|q|) for radial F, G.

    inner(k, q) must return int_{|k-q|}^{k+q} s G(s) ds; the angular integral then
    reduces the convolution to (1/(4 pi^2 k)) int q F(q) inner(k, q) dq.
    """
    if k <= 0:
        raise ParameterError("use the k -> 0 limit form for k = 0")
    pts = sorted({float(s) for s in list(scales) + [k] if s > 0})
    edges = [0.0] + pts
    g = lambda q: q * float(F(q)) * inner(k, q)
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(g, lo, hi, epsabs=0, epsrel=epsrel, limit=400)
        val += v
        err += e
    v, e = integrate.quad(lambda w: g(1 / w) / w ** 2, 0, 1 / edges[-1], epsabs=0,
                          epsrel=epsrel, limit=400)
    c = 1.0 / (4 * np.pi ** 2 * k)
    return c * (val + v), c * (err + e)


def generic_inner(G: Callable, epsrel=1e-11):
    def inner(k, q):
        return integrate.quad(lambda s: s * float(G(s)), abs(k - q), k + q,
                              epsabs=0, epsrel=epsrel, limit=200)[0]
    return inner


def nu_convolution(F: Callable, k: float, p: PotentialParams, scales=(), epsrel=1e-10):
    """int d^3q/(2 pi)^3 nu(k - q) F(q), with the inner s-integral of nu done analytically."""
    R = p.R0

    def g(q):
        dm = 1 + ((k - q) * R) ** 2
        dp = 1 + ((k + q) * R) ** 2
        return q * q * float(F(q)) / (dm * dp)

    pts = sorted({float(s) for s in list(scales) + [k] if s > 0})
    edges = [0.0] + pts
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(g, lo, hi, epsabs=0, epsrel=epsrel, limit=400)
        val += v
        err += e
    v, e = integrate.quad(lambda w: g(1 / w) / w ** 2, 0, 1 / edges[-1], epsabs=0,
                          epsrel=epsrel, limit=400)
    c = 4 * p.a0 / np.pi
    return c * (val + v), c * (err + e)


@dataclass
class Depletion:
    rho0: float
    I1: RadialFunction
    I2: RadialFunction
    err: float


def depletion_and_convolutions(tf: TrialFunction, rho: float, p: PotentialParams) -> Depletion:
    k = tf.k
    if tf.is_zero:
        z = np.zeros_like(k)
        return Depletion(rho, RadialFunction(k, z), RadialFunction(k, z), 0.0)
    sc = _scales(rho, p)
    dep, err = radial_integral(tf.sinh2_fn, sc)
    i1 = np.empty_like(k)
    i2 = np.empty_like(k)
    errs = []
    for j, kk in enumerate(k):
        i1[j], e1 = nu_convolution(tf.sc_fn, kk, p, sc)
        i2[j], e2 = nu_convolution(tf.sinh2_fn, kk, p, sc)
        errs.append(max(e1 / max(abs(i1[j]), 1e-300), e2 / max(abs(i2[j]), 1e-300)))
    if max(errs) > 1e-6:
        raise ConvergenceError("convolution quadrature did not converge", max(errs))
    return Depletion(rho - dep, RadialFunction(k, i1), RadialFunction(k, i2), err)


# ---------------------------------------------------------------- energy

@dataclass
class UpperBoundReport:
    energy_per_particle: float
    rho0: float
    depletion_fraction: float
    I1: RadialFunction
    I2: RadialFunction
    main_integral: float
    terms: dict
    energy_ratio: float = 1.0     # energy per particle over 4 pi rho a0
    err: float = 0.0


def variational_energy(tf: TrialFunction, rho: float, p: PotentialParams,
                       dep: Optional[Depletion] = None) -> UpperBoundReport:
    """Thermodynamic-limit trial energy per particle of the Bogoliubov state."""
    dep = dep or depletion_and_convolutions(tf, rho, p)
    r0 = dep.rho0
    sc = _scales(rho, p)
    nu = lambda q: nu_hat(q, p)
    pieces = {
        "mean_field": (0.5 * rho * float(nu(0.0)), 0.0),
        "kinetic": radial_integral(lambda q: q * q * tf.sinh2_fn(q), sc),
        "direct": radial_integral(lambda q: r0 * nu(q) * tf.sinh2_fn(q), sc),
        "exchange_I2": radial_integral(lambda q: 0.5 * dep.I2(q) * tf.sinh2_fn(q), sc),
        "pairing": radial_integral(lambda q: -r0 * nu(q) * tf.sc_fn(q), sc),
        "pairing_I1": radial_integral(lambda q: 0.5 * dep.I1(q) * tf.sc_fn(q), sc),
    }
    terms = {"mean_field": pieces["mean_field"][0]}
    err = 0.0
    for name, (v, e) in pieces.items():
        if name != "mean_field":
            terms[name] = v / rho
            err += e / rho
    total = sum(terms.values())
    J = bogoliubov_integral(rho, p)[0]
    ratio = total / (4 * np.pi * rho * p.a0)
    return UpperBoundReport(total, r0, 1 - r0 / rho, dep.I1, dep.I2, J, terms, ratio, err)


# ---------------------------------------------------------------- main integral

def _G_minus_born(eps: float, epsrel=1e-12) -> tuple[float, float]:
    """G(eps) - 5/16 in the cancellation-free form, kappa = k R0."""
    def integrand(x):
        f = 1.0 / (1 + x * x) ** 2
        A = x * x + eps * f
        E = np.sqrt(x ** 4 + 2 * eps * f * x * x)
        return f ** 3 * (1 + 2 * x * x / (x * x + E)) / (2 * (A + E))

    s = np.sqrt(eps)
    pts = sorted({s / 10, s, 10 * s, 1.0, 10.0})
    edges = [0.0] + [q for q in pts if q <= 10.0]
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        v, e = integrate.quad(integrand, lo, hi, epsabs=0, epsrel=epsrel, limit=400)
        val += v
        err += e
    v, e = integrate.quad(lambda w: integrand(1 / w) / w ** 2, 0, 0.1, epsabs=0,
                          epsrel=epsrel, limit=400)
    val += v
    err += e
    c = -(4 / np.pi) * eps
    return c * val, abs(c) * err


def bogoliubov_G(eps: float) -> tuple[float, float]:
    """Dimensionless main integral per unit a0/R0 as a function of eps = rho nu(0) R0^2."""
    if not eps > 0:
        raise ParameterError("eps must be positive")
    v, e = _G_minus_born(eps)
    return BORN_CONSTANT + v, e


def bogoliubov_integral_direct(rho: float, p: PotentialParams) -> tuple[float, float]:
    """Same integral from the conjugate form (rho nu)^2/(A + E) in physical units."""
    def f(q):
        w = rho * float(nu_hat(q, p))
        A = q * q + w
        E = np.sqrt(q ** 4 + 2 * w * q * q)
        return w * w / (A + E)
    v, e = radial_integral(f, _scales(rho, p))
    c = 1.0 / (8 * np.pi * rho ** 2 * p.a0)
    return c * v, c * e


def bogoliubov_integral(rho: float, p: PotentialParams) -> tuple[float, float]:
    """J = (1/(8 pi rho^2 a0)) int d^3k/(2 pi)^3 [k^2 + rho nu - sqrt(k^4 + 2 rho nu k^2)].

    Returns (J, error estimate); J depends only on a0/R0 and eps = 8 pi rho a0 R0^2.
    """
    if not rho > 0:
        raise ParameterError("rho must be positive")
    eps = 8 * np.pi * rho * p.a0 * p.R0 ** 2
    G, e = bogoliubov_G(eps)
    return p.ratio * G, p.ratio * e


def lhy_energy(rho: float, a: float) -> float:
    """4 pi rho a (1 + (128/(15 sqrt pi)) sqrt(rho a^3))."""
    if a < 0 or rho < 0:
        raise ParameterError("rho and a must be nonnegative")
    y = rho * a ** 3
    if y >= 1e-2:
        warnings.warn(f"rho a^3 = {y:.3g} is outside the dilute regime", RuntimeWarning)
    return 4 * np.pi * rho * a * (1 + LHY_COEFFICIENT * np.sqrt(y))


def sqrt_y_fit(sweep, value_key: str = "value") -> tuple[float, float, float]:
    """Least-squares fit value = c0 + c1 sqrt(Y); returns (c0, c1, rms residual)."""
    rows = sweep.rows if hasattr(sweep, "rows") else sweep
    Y = np.array([r["Y"] for r in rows], dtype=float)
    v = np.array([r[value_key] for r in rows], dtype=float)
    if len(Y) < 4:
        raise ParameterError("need at least 4 sweep points")
    if Y.max() / Y.min() < 100:
        raise ParameterError("Y must span at least two decades")
    X = np.column_stack([np.ones_like(Y), np.sqrt(Y)])
    # column scaling keeps the normal equations well conditioned
    scale = np.abs(X).max(axis=0)
    Xs = X / scale
    if np.linalg.cond(Xs) > 1e8:
        raise ConvergenceError("ill-conditioned fit", float(np.linalg.cond(Xs)))
    coef, *_ = np.linalg.lstsq(Xs, v, rcond=None)
    coef = coef / scale
    res = float(np.sqrt(np.mean((X @ coef - v) ** 2)))
    return float(coef[0]), float(coef[1]), res

"""Exponential interaction, its Fourier transforms and the box localization profiles."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import expit


class ParameterError(ValueError):
    """Raised when inputs violate an operation's preconditions."""


class ConvergenceError(RuntimeError):
    """Raised when a numerical routine fails to reach its tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PotentialParams:
    a0: float
    R0: float
    rho: Optional[float] = None

    def __post_init__(self):
        if not (self.a0 > 0 and np.isfinite(self.a0)):
            raise ParameterError(f"a0 must be positive, got {self.a0}")
        if not (self.R0 > 0 and np.isfinite(self.R0)):
            raise ParameterError(f"R0 must be positive, got {self.R0}")
        if self.rho is not None and not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")

    @property
    def ratio(self) -> float:
        """Dimensionless coupling a0/R0."""
        return self.a0 / self.R0

    @property
    def Y(self) -> Optional[float]:
        if self.rho is None:
            return None
        return self.rho * self.a0 ** 3

    @property
    def weak(self) -> bool:
        return self.ratio < 1.0

    def require_weak(self) -> None:
        if not self.weak:
            raise ParameterError(f"weak coupling a0/R0 < 1 required, got {self.ratio}")

    def with_rho(self, rho: float) -> "PotentialParams":
        return PotentialParams(self.a0, self.R0, rho)

    @classmethod
    def from_scaling(cls, Y: float, d: float, R0: float = 1.0) -> "PotentialParams":
        """Parameters with a0/R0 = Y^(1/2 - d) and rho a0^3 = Y."""
        if not 0 < Y < 1:
            raise ParameterError(f"Y must lie in (0, 1), got {Y}")
        a0 = R0 * Y ** (0.5 - d)
        return cls(a0, R0, Y / a0 ** 3)


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ParameterError("radial momentum must be nonnegative")
    return k


def v_hat_R(k, R: float):
    """Fourier transform of exp(-|x|/R): 8 pi R^3 / (1 + (kR)^2)^2."""
    if not R > 0:
        raise ParameterError(f"R must be positive, got {R}")
    k = _check_k(k)
    return 8 * np.pi * R ** 3 / (1 + (k * R) ** 2) ** 2


def nu_hat(k, p: PotentialParams):
    """Fourier transform of the interaction (a0/R0^3) exp(-r/R0)."""
    k = _check_k(k)
    return 8 * np.pi * p.a0 / (1 + (k * p.R0) ** 2) ** 2


def potential(r, p: PotentialParams):
    return p.a0 / p.R0 ** 3 * np.exp(-np.asarray(r, dtype=float) / p.R0)


def radial_fourier_transform(func: Callable[[float], float], q: float, rmax: float = np.inf,
                             points=None, epsrel: float = 1e-11) -> tuple[float, float]:
    """4 pi int_0^rmax r^2 f(r) sin(qr)/(qr) dr, returned as (value, error estimate)."""
    if q < 0:
        raise ParameterError("q must be nonnegative")
    if q == 0:
        val, err = integrate.quad(lambda r: r * r * func(r), 0, rmax, points=points,
                                  epsabs=0, epsrel=epsrel, limit=400)
        return 4 * np.pi * val, 4 * np.pi * err
    g = lambda r: r * func(r)
    if np.isinf(rmax):
        # the Fourier-integral routine only honors an absolute tolerance: rescale from a first pass
        val, err = integrate.quad(g, 0, np.inf, weight="sin", wvar=q, limlst=200)
        if val != 0:
            val, err = integrate.quad(g, 0, np.inf, weight="sin", wvar=q, limlst=200, limit=400,
                                      epsabs=epsrel * abs(val))
    else:
        edges = [0.0] + sorted(x for x in (points or []) if 0 < x < rmax) + [rmax]
        val = err = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(g, lo, hi, weight="sin", wvar=q, epsabs=0,
                                  epsrel=epsrel, limit=400)
            val += v
            err += e
    return 4 * np.pi * val / q, 4 * np.pi * err / q


@dataclass
class RadialFunction:
    """Radial profile sampled on a log-spaced grid, cubic in log(k).

    Outside the grid the profile follows the power laws k^low_power (small k)
    and k^(-tail_power) (large k), anchored at the grid ends.
    """
    k: np.ndarray
    values: np.ndarray
    low_power: float = 0.0
    tail_power: float = 4.0
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.k.ndim != 1 or self.k.shape != self.values.shape or len(self.k) < 4:
            raise ParameterError("grid and values must be matching 1D arrays of length >= 4")
        if np.any(self.k <= 0) or np.any(np.diff(self.k) <= 0):
            raise ParameterError("grid must be positive and increasing")
        self._spline = CubicSpline(np.log(self.k), self.values)

    @classmethod
    def sample(cls, func, k_min: float, k_max: float, n: int = 400, **kw) -> "RadialFunction":
        k = np.geomspace(k_min, k_max, n)
        return cls(k, func(k), **kw)

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        out = np.empty_like(q)
        lo, hi = self.k[0], self.k[-1]
        inside = (q >= lo) & (q <= hi)
        out[inside] = self._spline(np.log(q[inside]))
        below = q < lo
        out[below] = self.values[0] * (q[below] / lo) ** self.low_power
        above = q > hi
        out[above] = self.values[-1] * (q[above] / hi) ** (-self.tail_power)
        return out


# ---------------------------------------------------------------- localization

def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, S(x) + S(1-x) = 1."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1, 1.0, 0.0)
    mid = (x > 0) & (x < 1)
    xm = x[mid]
    out[mid] = expit(1.0 / (1.0 - xm) - 1.0 / xm)
    return out


def chi_1d(s, t: float):
    """Even plateau bump: 1 on |s| <= (1-2t)/2, 0 on |s| >= (1-t)/2."""
    s = np.abs(np.asarray(s, dtype=float))
    return smooth_step(((1 - t) / 2 - s) / (t / 2))


def _chi_breaks(t):
    return np.array([-(1 - t) / 2, -(1 - 2 * t) / 2, (1 - 2 * t) / 2, (1 - t) / 2])


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def _overlap_1d(s: float, t: float) -> float:
    """int chi(y) chi(y+s) dy by Gauss-Legendre between the profile's breakpoints."""
    s = abs(float(s))
    half = (1 - t) / 2
    lo, hi = -half, half - s
    if hi <= lo:
        return 0.0
    b = np.concatenate([_chi_breaks(t), _chi_breaks(t) - s])
    edges = np.unique(np.concatenate([[lo, hi], b[(b > lo) & (b < hi)]]))
    total = 0.0
    for a, c in zip(edges[:-1], edges[1:]):
        y = 0.5 * (c - a) * _GL_X + 0.5 * (a + c)
        total += 0.5 * (c - a) * np.dot(_GL_W, chi_1d(y, t) * chi_1d(y + s, t))
    return total


@lru_cache(maxsize=64)
def chi_norm_1d(t: float) -> float:
    """int chi^2 over the line; the plateau contributes 1-2t, each edge t*int S^2."""
    return _overlap_1d(0.0, t)


def _stepsq_integral() -> float:
    return integrate.quad(lambda x: float(smooth_step(x) ** 2), 0, 1, epsabs=0, epsrel=1e-13)[0]


def h_1d(s, t: float):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n = chi_norm_1d(t)
    return np.array([_overlap_1d(v, t) for v in s.ravel()]).reshape(s.shape) / n


@dataclass(frozen=True)
class LocalizationProfile:
    """Product bump chi(x/ell) on a box of side ell with its normalized self-overlap h."""
    t: float
    ell: float = 1.0

    def __post_init__(self):
        if not 0 < self.t < 0.5:
            raise ParameterError(f"t must lie in (0, 1/2), got {self.t}")
        if not self.ell > 0:
            raise ParameterError(f"ell must be positive, got {self.ell}")

    @property
    def gamma(self) -> float:
        return chi_norm_1d(self.t) ** -3

    def gamma_analytic(self) -> float:
        """Same normalization from the plateau + edge decomposition."""
        return (1 - 2 * self.t + self.t * _stepsq_integral()) ** -3

    def chi1(self, s):
        return chi_1d(s, self.t)

    def chi(self, x):
        """chi(x/ell) for points x of shape (..., 3)."""
        u = np.asarray(x, dtype=float) / self.ell
        return np.prod(chi_1d(u, self.t), axis=-1)

    def h1(self, s):
        return h_1d(s, self.t)

    def h(self, z):
        """h(z/ell) for displacement(s) z of shape (..., 3)."""
        u = np.asarray(z, dtype=float) / self.ell
        return np.prod(h_1d(u, self.t), axis=-1)

    def h_radial(self, r, direction: str = "axis"):
        """h along a coordinate axis or along the cube diagonal, as a function of |z|/ell."""
        r = np.asarray(r, dtype=float) / self.ell
        if direction == "axis":
            return h_1d(r, self.t)
        if direction == "diagonal":
            return h_1d(r / np.sqrt(3), self.t) ** 3
        raise ParameterError(f"unknown direction {direction!r}")


def localization_profiles(t: float, ell: float = 1.0) -> LocalizationProfile:
    return LocalizationProfile(t, ell)


@lru_cache(maxsize=None)
def _step_derivative(m: int):
    import sympy as sp
    x = sp.symbols("x")
    expr = 1 / (1 + sp.exp(1 / x - 1 / (1 - x)))
    return sp.lambdify(x, sp.diff(expr, x, m), "numpy")


def chi_derivative_bounds(t: float, m_max: int = 6, n: int = 4001) -> dict[int, float]:
    """Measured C_m with max |d^m chi/ds^m| = C_m t^(-m); C_m does not depend on t."""
    if not 0 < t < 0.5:
        raise ParameterError(f"t must lie in (0, 1/2), got {t}")
    x = np.linspace(0, 1, n)[1:-1]
    out = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, m_max + 1):
            vals = np.abs(_step_derivative(m)(x))
            out[m] = float(np.nanmax(vals[np.isfinite(vals)])) * 2.0 ** m
    return out

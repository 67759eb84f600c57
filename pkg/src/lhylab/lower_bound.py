"""Sliding-kernel positivity, the box averaging identity and the lower-bound integral."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .bogoliubov_upper import radial_integral, phonon_scale
from .potentials import (ConvergenceError, LocalizationProfile, ParameterError, PotentialParams,
                         RadialFunction, chi_1d, chi_norm_1d, h_1d, smooth_step, v_hat_R)

_GL20_X, _GL20_W = np.polynomial.legendre.leggauss(20)


# ---------------------------------------------------------------- kernel positivity

@lru_cache(maxsize=16)
def _h_axis_spline(t: float, n: int = 4001) -> CubicSpline:
    r = np.linspace(0.0, 1.0 - t, n)
    return CubicSpline(r, h_1d(r, t), bc_type=((1, 0.0), (1, 0.0)))


@lru_cache(maxsize=16)
def h_curvature(t: float) -> float:
    """c with h = 1 - c r^2 + O(r^4) at the origin; c = int chi'^2 / (2 int chi^2)."""
    dS = lambda x: float(np.exp(-1 / x - 1 / (1 - x)) * (1 / x ** 2 + 1 / (1 - x) ** 2)
                         / (np.exp(-1 / x) + np.exp(-1 / (1 - x))) ** 2) if 0 < x < 1 else 0.0
    ds2 = integrate.quad(lambda x: dS(x) ** 2, 0, 1, epsabs=0, epsrel=1e-12, limit=200)[0]
    return 2 * ds2 / (t * chi_norm_1d(t))


@dataclass(frozen=True)
class SlidingKernelParams:
    """K(z) = e^(-nu|z|) [1 - e^(-omega|z|) h(z) / (1 + omega/nu)] in box units."""
    nu: float
    omega: float
    t: float = 0.1
    h: Union[LocalizationProfile, float, None] = None   # None -> profile at t; float -> constant h

    def __post_init__(self):
        if not (self.nu >= self.omega > 0):
            raise ParameterError(f"need nu >= omega > 0, got nu={self.nu}, omega={self.omega}")
        if not 0 < self.t < 0.5:
            raise ParameterError(f"t must lie in (0, 1/2), got {self.t}")

    @property
    def R_over_R0(self) -> float:
        """R/R0 from 1/R = 1/R0 + omega/ell, with nu = ell/R0."""
        return 1.0 / (1.0 + self.omega / self.nu)

    def h_values(self, r, direction="axis"):
        r = np.asarray(r, dtype=float)
        if isinstance(self.h, (int, float)):
            return np.full_like(r, float(self.h))
        t = self.t if self.h is None else self.h.t
        if direction == "axis":
            out = np.where(r < 1 - t, _h_axis_spline(t)(np.minimum(r, 1 - t)), 0.0)
            return out
        if direction == "diagonal":
            s = r / np.sqrt(3)
            return np.where(s < 1 - t, _h_axis_spline(t)(np.minimum(s, 1 - t)), 0.0) ** 3
        raise ParameterError(f"unknown direction {direction!r}")

    def support(self) -> float:
        if isinstance(self.h, (int, float)):
            return np.inf
        t = self.t if self.h is None else self.h.t
        return 1 - t

    def curvature(self, direction="axis") -> float:
        if isinstance(self.h, (int, float)):
            return 0.0
        t = self.t if self.h is None else self.h.t
        return h_curvature(t)      # isotropic at second order

    def kernel(self, r, direction="axis"):
        r = np.asarray(r, dtype=float)
        mu = self.nu + self.omega
        return np.exp(-self.nu * r) - self.R_over_R0 * np.exp(-mu * r) * self.h_values(r, direction)


def _panel_nodes(r_max: float, p_max: float, breaks=()):
    w = min(r_max / 16, 2 * np.pi / p_max)
    edges = np.unique(np.concatenate([np.linspace(0, r_max, int(np.ceil(r_max / w)) + 1),
                                      [b for b in breaks if 0 < b < r_max]]))
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * _GL20_X + 0.5 * (a + b)).ravel()
    wts = (0.5 * (b - a) * _GL20_W).ravel()
    return x, wts


def _radial_ft_nodes(vals, x, wts, p):
    """4 pi int r^2 f(r) sinc(p r) dr on precomputed nodes, for a vector of p."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    zero = p == 0
    out[zero] = 4 * np.pi * np.dot(wts, x * x * vals)
    pp = p[~zero]
    out[~zero] = 4 * np.pi * (np.sin(np.outer(pp, x)) @ (wts * x * vals)) / pp
    return out


@dataclass
class KernelTransform:
    K: RadialFunction
    F: RadialFunction
    F0: float
    min_F: float
    p_min_F: float
    tail_coefficient: float          # F ~ tail_coefficient / p^6 beyond the grid
    p_grid_max: float
    p_cover: float                   # momentum where |F| drops below 1e-12 F(0)
    positive: bool
    direction: str = "axis"


def sliding_kernel_transform(sk: SlidingKernelParams, grid=None, direction: str = "axis",
                             method: str = "split", n_p: int = 400) -> KernelTransform:
    nu, om = sk.nu, sk.omega
    mu = nu + om
    t = sk.t if sk.h is None or isinstance(sk.h, (int, float)) else sk.h.t
    P = 60 * max(mu, 1 / t)
    if grid is None:
        p = np.concatenate([[0.0], np.geomspace(1e-3 * min(nu, 1.0), P, n_p)])
    else:
        p = np.asarray(grid, dtype=float)
        P = max(P, float(p.max()))
    breaks = [t / 2 * j for j in range(1, 8)] + [1 - 2 * t, 1 - 1.5 * t, 1 - t] if sk.support() < np.inf else []
    if method == "split":
        rc = min(sk.support(), 50 / mu)
        x, w = _panel_nodes(rc, P, breaks)
        part = _radial_ft_nodes(np.exp(-mu * x) * sk.h_values(x, direction), x, w, p)
        F = 8 * np.pi * nu / (nu ** 2 + p ** 2) ** 2 - sk.R_over_R0 * part
    elif method == "full":
        rc = 50 / nu
        x, w = _panel_nodes(rc, P, breaks)
        F = _radial_ft_nodes(sk.kernel(x, direction), x, w, p)
    else:
        raise ParameterError(f"unknown method {method!r}")
    tail = 16 * np.pi * nu * (mu ** 2 - nu ** 2 - 6 * sk.curvature(direction))
    F0 = float(F[0]) if p[0] == 0 else float("nan")
    i = int(np.argmin(F))
    ref = F0 if np.isfinite(F0) else float(np.max(np.abs(F)))
    p_cover = max(P, (abs(tail) / (1e-12 * abs(ref))) ** (1 / 6)) if ref else P
    rk = np.geomspace(max(1e-6, 1e-3 / nu), 50 / nu, 200)
    pos = p > 0
    return KernelTransform(
        K=RadialFunction(rk, sk.kernel(rk, direction), tail_power=0.0),
        F=RadialFunction(p[pos], F[pos], tail_power=6.0),
        F0=F0, min_F=float(F[i]), p_min_F=float(p[i]), tail_coefficient=float(tail),
        p_grid_max=float(p.max()), p_cover=float(p_cover),
        positive=bool(F[i] > 0 and tail > 0), direction=direction)


def is_positive(nu: float, omega: float, t: float, n_p: int = 300) -> bool:
    return sliding_kernel_transform(SlidingKernelParams(nu, omega, t), n_p=n_p).positive


@dataclass
class C1Estimate:
    c1: float
    thresholds: dict          # omega -> nu threshold
    at_lower_edge: list = field(default_factory=list)


def estimate_c1(t: float, omega_grid, nu_grid, rel_tol: float = 1e-3) -> C1Estimate:
    """Empirical C1: max over omega of min(1, omega) * nu_threshold * t."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    nu_grid = np.asarray(nu_grid, dtype=float)
    for g in (omega_grid, nu_grid):
        if g.max() / g.min() < 100 - 1e-9:
            raise ParameterError("omega and nu grids must each span at least two decades")
    thresholds, edge = {}, []
    for om in omega_grid:
        lo, hi = max(om, nu_grid.min()), nu_grid.max()
        if hi < lo:
            raise ParameterError(f"nu grid lies below omega={om}")
        if is_positive(lo, om, t):
            thresholds[float(om)] = lo
            edge.append(float(om))
            continue
        if not is_positive(hi, om, t):
            raise ConvergenceError(f"no positivity threshold below nu={hi} for omega={om}")
        while hi / lo > 1 + rel_tol:
            mid = np.sqrt(lo * hi)
            if is_positive(mid, om, t):
                hi = mid
            else:
                lo = mid
        thresholds[float(om)] = hi
    c1 = max(min(1.0, om) * nu * t for om, nu in thresholds.items())
    return C1Estimate(float(c1), thresholds, edge)


@lru_cache(maxsize=8)
def measured_c1(t: float = 0.1) -> float:
    """C1 measured on a default grid; it is t-independent up to the profile's own scaling."""
    return estimate_c1(t, np.geomspace(0.05, 5, 6), np.geomspace(0.05, 5e4, 16)).c1


# ---------------------------------------------------------------- averaging identity

def averaging_identity_residual(x, y, lp: LocalizationProfile, R: float, R0: float) -> float:
    """Relative mismatch between the z-averaged localized kernel and (R/R0) h v_R."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ell, t = lp.ell, lp.t
    v = np.exp(-np.linalg.norm(x - y) / R)
    prod = 1.0
    for xi, yi in zip(x, y):
        # int dz/ell chi((xi+z)/ell) chi((yi+z)/ell), by adaptive quadrature on the z line
        f = lambda z: float(chi_1d((xi + z) / ell, t) * chi_1d((yi + z) / ell, t))
        half = (1 - t) * ell / 2
        lo, hi = max(-half - xi, -half - yi), min(half - xi, half - yi)
        if hi <= lo:
            prod = 0.0
            break
        pts = [s * ell / 2 - c for s in (-(1 - t), -(1 - 2 * t), 1 - 2 * t, 1 - t) for c in (xi, yi)]
        pts = sorted(q for q in pts if lo < q < hi)
        val, err = integrate.quad(f, lo, hi, points=pts or None, epsabs=0, epsrel=1e-12, limit=400)
        if err > 1e-9 * max(abs(val), 1e-300):
            raise ConvergenceError("averaging quadrature failed", err)
        prod *= val / ell
    lhs = lp.gamma * (R / R0) * prod * v
    rhs = (R / R0) * float(lp.h(x - y)) * v
    if lhs == 0 and rhs == 0:
        return 0.0
    return abs(lhs - rhs) / max(abs(rhs), abs(lhs))


# ---------------------------------------------------------------- lower-bound integral

def box_range(p: PotentialParams, ell: float, t: float, c_omega: float) -> float:
    """R with 1/R = 1/R0 + omega(t)/ell and omega(t) = c_omega R0 / (t ell)."""
    omega = c_omega * p.R0 / (t * ell)
    return 1.0 / (1.0 / p.R0 + omega / ell)


@dataclass
class LowerBoundKernels:
    f: RadialFunction
    g: RadialFunction
    I: float
    err: float
    params: dict
    g_integral_bound: float          # (1/2 rho) int g, analytic
    g_integral_quadrature: float     # same by quadrature
    split_bound: float               # low-k int g + high-k int g^2/(f-g)
    chain_expression: float          # rho a0 {sqrt(Y) + (a0/R)[1 + (R/(ell t^3))^2/(sqrt(rho a0) R)]}
    pointwise_ok: bool

    @property
    def I_ratio(self) -> float:
        """I / (4 pi rho a0)."""
        pr = self.params
        return self.I / (4 * np.pi * pr["rho"] * pr["a0"])


def lower_bound_integral(rho: float, p: PotentialParams, ell: float, t: float, n: float,
                         Cprime: float = 1.0, c_omega: Optional[float] = None,
                         gamma: Optional[float] = None, n_grid: int = 300) -> LowerBoundKernels:
    if not (rho > 0 and ell > 0 and 0 < t < 0.5):
        raise ParameterError("need rho > 0, ell > 0 and 0 < t < 1/2")
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not Cprime * t < 1:
        raise ParameterError("need C' t < 1")
    c_omega = measured_c1() if c_omega is None else c_omega
    R = box_range(p, ell, t, c_omega)
    if gamma is None:
        gamma = LocalizationProfile(t, ell).gamma
    kin = (1 - Cprime * t) ** 2 * rho * ell ** 3 / n
    kc2 = (ell * t ** 3) ** -2
    gpref = gamma * p.a0 * R * rho / p.R0 ** 4

    def T(k):
        return kin * k ** 4 / (k * k + kc2)

    def g(k):
        return gpref * v_hat_R(k, R)

    def f(k):
        return T(k) + g(k)

    def integrand(k):
        gk = g(k)
        fk = T(k) + gk
        return gk * gk / (fk + np.sqrt(T(k) * (fk + gk)))

    kp = phonon_scale(rho, p)
    scales = [kp / 10, kp, 10 * kp, np.sqrt(kc2), 1 / R, 10 / R, np.sqrt(p.a0 * rho)]
    kk = np.geomspace(min(scales) / 100, 100 * max(scales), n_grid)
    Tk, gk = T(kk), g(kk)
    if np.any(Tk <= 0):
        bad = kk[np.argmax(Tk <= 0)]
        raise ParameterError(f"need f > g for k > 0; violated at k = {bad:.3g}")
    val, err = radial_integral(integrand, scales)
    I = val / (2 * rho)
    err = err / (2 * rho)

    # elementary inequality 0 <= f - sqrt(f^2 - g^2) <= min(g, g^2/(f-g)) on the grid
    lhs = gk * gk / (Tk + gk + np.sqrt(Tk * (Tk + 2 * gk)))
    pointwise_ok = bool(np.all(lhs >= 0) and np.all(lhs <= np.minimum(gk, gk * gk / Tk) * (1 + 1e-14)))

    g_bound = gpref / (2 * rho)      # int d^3k/(2 pi)^3 V_R = 1
    g_quad = radial_integral(g, scales)[0] / (2 * rho)
    k_split = np.sqrt(p.a0 * rho)
    low = radial_integral(lambda k: g(k) if k <= k_split else 0.0, [k_split])[0]
    high = radial_integral(lambda k: g(k) ** 2 / T(k) if k >= k_split else 0.0,
                           [k_split] + [s for s in scales if s > k_split])[0]
    split = (low + high) / (2 * rho)
    Y = rho * p.a0 ** 3
    chain = rho * p.a0 * (np.sqrt(Y) + p.a0 / R * (1 + (R / (ell * t ** 3)) ** 2 / (np.sqrt(rho * p.a0) * R)))
    params = dict(rho=rho, a0=p.a0, R0=p.R0, ell=ell, t=t, n=n, Cprime=Cprime, c_omega=c_omega,
                  R=R, gamma=gamma)
    return LowerBoundKernels(RadialFunction(kk, Tk + gk), RadialFunction(kk, gk), I, err, params,
                             g_bound, g_quad, split, chain, pointwise_ok)


@dataclass
class AprioriReport:
    certificate: float          # 2 pi gamma a0 R^4/R0^4 (-4 n rho + rho^2 ell^3)
    nonnegative_regime: bool    # n <= rho ell^3 / 4
    depletion_scale: float      # a0 ell^2 / R0^3
    depletion_regime_ok: bool


def apriori_thresholds(rho: float, p: PotentialParams, ell: float, t: float, n: float,
                       R: Optional[float] = None, c_omega: float = 1.0) -> AprioriReport:
    R = box_range(p, ell, t, c_omega) if R is None else R
    gamma = LocalizationProfile(t, ell).gamma
    cert = 2 * np.pi * gamma * p.a0 * R ** 4 / p.R0 ** 4 * (-4 * n * rho + rho ** 2 * ell ** 3)
    scale = p.a0 * ell ** 2 / p.R0 ** 3
    return AprioriReport(cert, cert >= 0, scale, scale < 1)

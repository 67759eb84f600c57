"""Parameter sweeps against the gas parameter Y, with fit and provenance metadata."""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .bogoliubov_upper import (LHY_COEFFICIENT, SIGN_CONVENTION, bogoliubov_integral, optimal_psi,
                               sqrt_y_fit, variational_energy, default_grid)
from .exponents import ExponentTriple
from .lower_bound import lower_bound_integral
from .potentials import ConvergenceError, ParameterError, PotentialParams
from .scattering import born_coefficients, scattering_length

QUANTITIES = ("bogoliubov-integral", "lower-bound-i", "upper-bound", "scattering")

# prefactors of t ~ Y^tau and ell ~ a0 Y^(-b-1/2) used when a box is derived from exponents
DEFAULT_T_PREFACTOR = 1e-3
DEFAULT_ELL_PREFACTOR = 1e15


def thread_count() -> int:
    raw = os.environ.get("LHYLAB_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"LHYLAB_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ParameterError("LHYLAB_THREADS must be >= 1")
    return n


def parse_y_range(spec: str) -> np.ndarray:
    """'lo:hi:count' -> count log-spaced values from lo to hi."""
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise ParameterError(f"Y range must look like 1e-8:1e-5:8, got {spec!r}")
    if not (0 < lo < hi < 1 and count >= 1):
        raise ParameterError("need 0 < lo < hi < 1 and count >= 1")
    return np.geomspace(lo, hi, count)


def scaled_box(Y: float, d: float, triple: ExponentTriple, R0: float = 1.0,
               t_prefactor: float = DEFAULT_T_PREFACTOR, ell_prefactor: float = DEFAULT_ELL_PREFACTOR):
    """(params with rho, ell, t, n) on the scaling curve fixed by the exponents, neutral n = rho ell^3."""
    p = PotentialParams.from_scaling(Y, d, R0)
    t = t_prefactor * Y ** float(triple.tau)
    ell = ell_prefactor * p.a0 * Y ** (-float(triple.b) - 0.5)
    return p, ell, t, p.rho * ell ** 3


def evaluate(quantity: str, Y: float, d: float, triple: Optional[ExponentTriple] = None,
             R0: float = 1.0, **options) -> dict:
    """One sweep row; numerical failures are reported in the 'error' field."""
    row = dict(quantity=quantity, Y=float(Y), d=float(d),
               b=None if triple is None else float(triple.b),
               tau=None if triple is None else float(triple.tau))
    try:
        p = PotentialParams.from_scaling(Y, d, R0)
        row["ratio"] = p.ratio
        meta = {}
        if quantity == "bogoliubov-integral":
            val, err = bogoliubov_integral(p.rho, p)
            meta["constant_term"] = -born_coefficients(p)[1] / p.a0
        elif quantity == "lower-bound-i":
            if triple is None:
                raise ParameterError("lower-bound-i needs an exponent triple (b, tau)")
            p, ell, t, n = scaled_box(Y, d, triple, R0, options.get("t_prefactor", DEFAULT_T_PREFACTOR),
                                      options.get("ell_prefactor", DEFAULT_ELL_PREFACTOR))
            lb = lower_bound_integral(p.rho, p, ell, t, n, Cprime=options.get("Cprime", 1.0),
                                      c_omega=options.get("c_omega"))
            scale = 4 * np.pi * p.rho * p.a0
            val, err = lb.I / scale, lb.err / scale
            meta.update(ell=ell, t=t, n=n, I=lb.I, g_bound=lb.g_integral_bound / scale)
            meta["constant_term"] = -born_coefficients(p)[1] / p.a0
        elif quantity == "upper-bound":
            tf = optimal_psi(p.rho, p, default_grid(p.rho, p, options.get("grid", 200)))
            rep = variational_energy(tf, p.rho, p)
            val, err = rep.energy_ratio, rep.err / (4 * np.pi * p.rho * p.a0)
            meta["depletion_fraction"] = rep.depletion_fraction
        elif quantity == "scattering":
            sol = scattering_length(p)
            val, err = sol.a / p.a0, sol.residual
        else:
            raise ParameterError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")
        row.update(value=float(val), err=float(err), meta=meta, error=None)
    except (ParameterError, ConvergenceError) as exc:
        row.update(value=None, err=None, meta={}, error=f"{type(exc).__name__}: {exc}")
    return row


@dataclass
class SweepResult:
    rows: list
    metadata: dict = field(default_factory=dict)
    fit: Optional[dict] = None

    @property
    def ok_rows(self) -> list:
        return [r for r in self.rows if r["error"] is None]

    def to_dict(self) -> dict:
        return dict(rows=self.rows, metadata=self.metadata, fit=self.fit)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run_sweep(quantity: str, Ys, d: float, triple: Optional[ExponentTriple] = None,
              R0: float = 1.0, threads: Optional[int] = None, fit: bool = True, **options) -> SweepResult:
    Ys = sorted(float(y) for y in Ys)
    if quantity not in QUANTITIES:
        raise ParameterError(f"unknown quantity {quantity!r}; choose from {QUANTITIES}")
    threads = thread_count() if threads is None else threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda y: evaluate(quantity, y, d, triple, R0, **options), Ys))
    cfg = dict(quantity=quantity, Y=Ys, d=d, R0=R0, options=options,
               triple=None if triple is None else [str(x) for x in triple.as_tuple()])
    meta = dict(version=__version__, config_hash=config_hash(cfg), sign_convention=SIGN_CONVENTION)
    result = SweepResult(rows, meta)
    good = result.ok_rows
    if fit and quantity in ("bogoliubov-integral", "lower-bound-i") and len(good) >= 4:
        try:
            c0, c1, rms = sqrt_y_fit(good)
            # J = -a1/a0 - c sqrt(Y): the LHY constant is the negated slope
            result.fit = dict(c0=c0, c1=c1, rms=rms, lhy_constant=-c1, lhy_reference=float(LHY_COEFFICIENT),
                              relative_deviation=float(abs(-c1 - LHY_COEFFICIENT) / LHY_COEFFICIENT))
        except (ParameterError, ConvergenceError) as exc:
            result.fit = dict(error=str(exc))
    return result

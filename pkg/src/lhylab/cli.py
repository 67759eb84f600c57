"""Command-line driver: lhylab <command> [options]; writes CSV or JSON.

Exit status: 0 success, 2 validation error, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .potentials import ConvergenceError, LocalizationProfile, ParameterError, PotentialParams

CSV_FIELDS = ("quantity", "Y", "d", "b", "tau", "value", "err", "meta")
CSV_SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    parameters: dict
    output_path: Optional[str] = None
    format: str = "json"
    seed: int = 0

    def canonical(self) -> dict:
        return dict(command=self.command, parameters=self.parameters, format=self.format, seed=self.seed)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=_jsonable).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x).__name__}")


def _row(quantity, value, err=0.0, Y=None, d=None, b=None, tau=None, **meta) -> dict:
    return dict(quantity=quantity, Y=Y, d=d, b=b, tau=tau, value=value, err=err, meta=meta)


def _triple(args):
    from .exponents import ExponentTriple
    return ExponentTriple(Fraction(args.d), Fraction(args.b), Fraction(args.tau))


def _params(args) -> PotentialParams:
    """(a0, R0, rho) from explicit values or from (Y, d)."""
    if getattr(args, "Y", None) is not None:
        if args.d is None:
            raise ParameterError("--Y needs --d")
        return PotentialParams.from_scaling(args.Y, float(Fraction(args.d)), args.R0)
    if args.a0 is None:
        raise ParameterError("give --a0 (and --rho) or --Y with --d")
    return PotentialParams(args.a0, args.R0, getattr(args, "rho", None))


# ---------------------------------------------------------------- commands

def cmd_scattering(args, cfg):
    from .scattering import born_coefficients, scattering_length
    p = _params(args)
    sol = scattering_length(p, method=args.method, tol=args.tol)
    born = born_coefficients(p)
    return [_row("scattering_length", sol.a, sol.residual, method=sol.method, a0=p.a0, R0=p.R0),
            _row("a1", born[1], 0.0, a0=p.a0, R0=p.R0)], {}


def cmd_upper_bound(args, cfg):
    from .bogoliubov_upper import default_grid, optimal_psi, variational_energy
    p = _params(args)
    if p.rho is None:
        raise ParameterError("upper-bound needs --rho or --Y")
    tf = optimal_psi(p.rho, p, default_grid(p.rho, p, args.grid))
    rep = variational_energy(tf, p.rho, p)
    scale = 4 * np.pi * p.rho * p.a0
    return [_row("energy_ratio", rep.energy_ratio, rep.err / scale, Y=p.Y, d=args.d,
                 depletion_fraction=rep.depletion_fraction, rho0=rep.rho0)], {"terms": rep.terms}


def cmd_bogoliubov_integral(args, cfg):
    from .bogoliubov_upper import SIGN_CONVENTION, bogoliubov_integral
    p = _params(args)
    if p.rho is None:
        raise ParameterError("bogoliubov-integral needs --rho or --Y")
    J, err = bogoliubov_integral(p.rho, p)
    return [_row("bogoliubov_integral", J, err, Y=p.Y, d=args.d, sign_convention=SIGN_CONVENTION)], {}


def cmd_lower_bound_i(args, cfg):
    from .lower_bound import lower_bound_integral
    from .sweep import scaled_box
    if args.Y is not None:
        tr = _triple(args)
        p, ell, t, n = scaled_box(args.Y, float(tr.d), tr, args.R0, args.t_prefactor, args.ell_prefactor)
        rho = p.rho
    else:
        p = _params(args)
        rho, ell, t = p.rho, args.ell, args.t
        if None in (rho, ell, t):
            raise ParameterError("lower-bound-i needs --rho, --ell and --t (or --Y with exponents)")
        n = args.n if args.n is not None else rho * ell ** 3
    lb = lower_bound_integral(rho, p, ell, t, n, Cprime=args.Cprime, c_omega=args.c_omega)
    scale = 4 * np.pi * rho * p.a0
    return [_row("lower_bound_I_ratio", lb.I / scale, lb.err / scale, Y=rho * p.a0 ** 3, d=args.d,
                 b=args.b, tau=args.tau, I=lb.I, g_bound=lb.g_integral_bound, ell=ell, t=t, n=n,
                 pointwise_ok=lb.pointwise_ok)], {}


def cmd_kernel_positivity(args, cfg):
    from .lower_bound import SlidingKernelParams, estimate_c1, sliding_kernel_transform
    rows = []
    if args.estimate:
        est = estimate_c1(args.t, np.geomspace(0.05, 5, 6), np.geomspace(0.05, 5e4, 16))
        rows.append(_row("c1_estimate", est.c1, 0.0, t=args.t,
                         thresholds={f"{k:.6g}": v for k, v in est.thresholds.items()}))
    if args.nu is not None:
        kt = sliding_kernel_transform(SlidingKernelParams(args.nu, args.omega, args.t))
        rows.append(_row("kernel_min_F", kt.min_F, 0.0, nu=args.nu, omega=args.omega, t=args.t,
                         positive=kt.positive, p_min=kt.p_min_F, tail_coefficient=kt.tail_coefficient))
    if not rows:
        raise ParameterError("give --nu/--omega and/or --estimate")
    return rows, {}


def cmd_averaging_identity(args, cfg):
    from .lower_bound import averaging_identity_residual
    rng = np.random.default_rng(cfg.seed)
    lp = LocalizationProfile(args.t, args.ell)
    rows = []
    for i in range(args.pairs):
        # offsets within the support of h so both sides are nonzero
        x, y = rng.uniform(-0.4, 0.4, (2, 3)) * args.ell
        res = averaging_identity_residual(x, y, lp, args.R, args.R0)
        rows.append(_row("averaging_residual", res, 0.0, pair=i, x=x.tolist(), y=y.tolist()))
    return rows, {"max_residual": max(r["value"] for r in rows)}


def cmd_exponents(args, cfg):
    from .exponents import check_exponents, error_budget, lp_vertex_grid, max_feasible_d, witness
    if args.action == "max-d":
        res = max_feasible_d()
        w = witness(Fraction(1, 100))
        infeasible = not any(check_exponents(e, verify_implication=False).summary_ok
                             for e in lp_vertex_grid(res.d_max))
        return [_row("max_feasible_d", str(res.d_max), 0, vertex=[str(v) for v in res.vertex],
                     certificate={k: str(v) for k, v in res.certificate.items()},
                     witness=[str(v) for v in w.as_tuple()], infeasible_at_max=infeasible)], {}
    tr = _triple(args)
    if args.action == "check":
        chk = check_exponents(tr)
        return [_row("exponent_check", chk.summary_ok, 0, d=str(tr.d), b=str(tr.b), tau=str(tr.tau),
                     all_ok=chk.all_ok, binding=chk.binding_term_bound,
                     results={k: [str(v[0]), v[1]] for k, v in chk.results.items()})], {}
    eb = error_budget(tr, args.Y)
    rows = [_row(f"budget:{e.label}", str(e.exponent), 0, Y=args.Y, d=str(tr.d), b=str(tr.b),
                 tau=str(tr.tau), threshold=str(e.threshold), dominated=e.dominated, magnitude=e.magnitude)
            for e in eb.entries]
    return rows, {"nu0": str(eb.nu0), "mu0": str(eb.mu0), "alpha1": str(eb.alpha1),
                  "all_dominated": eb.all_dominated}


def cmd_fock(args, cfg):
    from . import fock_verify as fv
    if args.action == "quadratic-check":
        chk = fv.quadratic_bound_check(fv.QuadraticFormParams(args.A, args.B, complex(args.kappa)),
                                       args.norm, args.cutoff)
        return [_row("quadratic_slack", chk.slack, chk.converged_difference, lhs=chk.lhs_min_eig,
                     rhs=chk.rhs_bound)], {}
    if args.action == "localize":
        rng = np.random.default_rng(cfg.seed)
        C, pilot = fv.calibrate_localization_constant(rng, args.count, args.N, psi_kind=args.psi)
        val = fv.localization_ratios(rng, args.count, args.N, psi_kind=args.psi)
        return [_row("localization_C_meas", C, 0.0, pilot=args.count, psi=args.psi),
                _row("localization_validation_max_ratio", float(val.max()), 0.0,
                     holds=bool(np.all(val <= C + 1e-12)))], {}
    p = PotentialParams(args.a0, args.R0)
    lp = LocalizationProfile(args.t, args.ell)
    modes = fv.ModeSet.lowest(args.modes, args.ell)
    fs = fv.TruncatedFockSpace(modes, args.n, args.cutoff)
    rho = args.rho if args.rho is not None else args.n / args.ell ** 3
    if args.action == "build":
        bh = fv.build_box_hamiltonian(fs, rho, p, lp, args.R)
        return [_row("ground_energy", bh.ground_energy(), 0.0, dim=fs.dim, nnz=int(bh.H.nnz),
                     asymmetry=bh.asymmetry, band=fv.band_width_in_excitations(fs, bh.H),
                     number_conserved=fv.number_conserved(fs, bh.H))], {}
    rec = fv.sandwich_report(fs, rho, p, lp, args.R)
    return [_row("sandwich_exact", rec.exact, 0.0, dim=rec.dim),
            _row("sandwich_upper", rec.upper, 0.0),
            _row("sandwich_lower", rec.lower, 0.0, budget=rec.budget, budget_terms=rec.budget_terms),
            _row("sandwich_ordering", rec.ordering_ok, 0.0)], {}


def cmd_sweep(args, cfg):
    from .sweep import parse_y_range, run_sweep
    tr = _triple(args) if args.b is not None and args.tau is not None else None
    res = run_sweep(args.quantity, parse_y_range(args.y), float(Fraction(args.d)), tr, args.R0)
    rows = []
    for r in res.rows:
        meta = dict(r["meta"], ratio=r.get("ratio"), error=r["error"])
        rows.append(_row(r["quantity"], r["value"], r["err"], Y=r["Y"], d=r["d"], b=r["b"], tau=r["tau"], **meta))
    failed = [r for r in res.rows if r["error"] is not None]
    if failed:
        print(f"warning: {len(failed)} sweep rows failed", file=sys.stderr)
    return rows, {"fit": res.fit, "sweep_metadata": res.metadata}


COMMANDS = {
    "scattering": cmd_scattering, "upper-bound": cmd_upper_bound,
    "bogoliubov-integral": cmd_bogoliubov_integral, "lower-bound-i": cmd_lower_bound_i,
    "kernel-positivity": cmd_kernel_positivity, "averaging-identity": cmd_averaging_identity,
    "exponents": cmd_exponents, "fock": cmd_fock, "sweep": cmd_sweep,
}


# ---------------------------------------------------------------- parser

def _add_potential(sp, rho=True):
    sp.add_argument("--a0", type=float)
    sp.add_argument("--R0", type=float, default=1.0)
    if rho:
        sp.add_argument("--rho", type=float)
    sp.add_argument("--Y", type=float, help="gas parameter; with --d fixes a0/R0 = Y^(1/2-d)")
    sp.add_argument("--d", type=str, help="exponent d (rational or decimal)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhylab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument("--config", help="JSON config file with per-command sections")
    common.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scattering", parents=[common], help="scattering length and Born terms")
    _add_potential(s, rho=False)
    s.add_argument("--method", choices=("shooting", "closed_form_oracle", "born"), default="shooting")
    s.add_argument("--tol", type=float, default=1e-10)

    s = sub.add_parser("upper-bound", parents=[common], help="Bogoliubov trial-state energy")
    _add_potential(s)
    s.add_argument("--grid", type=int, default=200)

    s = sub.add_parser("bogoliubov-integral", parents=[common], help="the main Bogoliubov integral J")
    _add_potential(s)

    s = sub.add_parser("lower-bound-i", parents=[common], help="the lower-bound integral I")
    _add_potential(s)
    s.add_argument("--b", type=str)
    s.add_argument("--tau", type=str)
    s.add_argument("--ell", type=float)
    s.add_argument("--t", type=float)
    s.add_argument("--n", type=float)
    s.add_argument("--Cprime", type=float, default=1.0)
    s.add_argument("--c-omega", dest="c_omega", type=float)
    s.add_argument("--t-prefactor", dest="t_prefactor", type=float, default=1e-3)
    s.add_argument("--ell-prefactor", dest="ell_prefactor", type=float, default=1e15)

    s = sub.add_parser("kernel-positivity", parents=[common], help="sliding-kernel Fourier positivity")
    s.add_argument("--nu", type=float)
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--t", type=float, default=0.1)
    s.add_argument("--estimate", action="store_true", help="also estimate the constant C1")

    s = sub.add_parser("averaging-identity", parents=[common], help="box-averaging identity residuals")
    s.add_argument("--t", type=float, default=0.1)
    s.add_argument("--ell", type=float, default=1.0)
    s.add_argument("--R", type=float, default=0.3)
    s.add_argument("--R0", type=float, default=0.5)
    s.add_argument("--pairs", type=int, default=20)

    s = sub.add_parser("exponents", parents=[common], help="exact exponent system")
    s.add_argument("action", choices=("check", "max-d", "budget"))
    s.add_argument("--d", type=str, default="1/100")
    s.add_argument("--b", type=str, default="7/200")
    s.add_argument("--tau", type=str, default="3/250")
    s.add_argument("--Y", type=float)

    s = sub.add_parser("fock", parents=[common], help="truncated Fock-space checks")
    s.add_argument("action", choices=("build", "quadratic-check", "localize", "sandwich"))
    s.add_argument("--A", type=float, default=2.0)
    s.add_argument("--B", type=float, default=1.0)
    s.add_argument("--kappa", type=complex, default=0j)
    s.add_argument("--norm", type=float, default=1.0)
    s.add_argument("--cutoff", type=int, default=None, help="per-mode cutoff (two-mode check: Fock cutoff)")
    s.add_argument("--count", type=int, default=200)
    s.add_argument("--N", type=int, default=40)
    s.add_argument("--psi", choices=("random", "ground", "mixed"), default="random",
                   help="trial-vector ensemble for localize")
    s.add_argument("--a0", type=float, default=0.01)
    s.add_argument("--R0", type=float, default=0.2)
    s.add_argument("--R", type=float, default=0.15)
    s.add_argument("--t", type=float, default=0.1)
    s.add_argument("--ell", type=float, default=1.0)
    s.add_argument("--modes", type=int, default=3)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--rho", type=float)

    s = sub.add_parser("sweep", parents=[common], help="any scalar quantity against Y")
    s.add_argument("--quantity", required=True,
                   choices=("bogoliubov-integral", "lower-bound-i", "upper-bound", "scattering"))
    s.add_argument("--d", type=str, required=True)
    s.add_argument("--y", type=str, required=True, help="lo:hi:count, log-spaced")
    s.add_argument("--b", type=str)
    s.add_argument("--tau", type=str)
    s.add_argument("--R0", type=float, default=1.0)
    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                section = json.load(fh).get(args.command, {})
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {args.config}: {exc}")
        # file values become defaults; explicit flags still win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(section) - known
        if unknown:
            raise ParameterError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        sub.set_defaults(**section)
        args = parser.parse_args(argv)
    if args.command == "fock" and args.cutoff is None:
        args.cutoff = 40 if args.action == "quadratic-check" else None
    return args


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in doc["rows"]:
        out = {k: r.get(k) for k in CSV_FIELDS}
        out["meta"] = json.dumps(r.get("meta", {}), sort_keys=True, default=_jsonable)
        w.writerow(out)
    return buf.getvalue()


def content_hash(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k not in ("timestamp", "content_hash")}
    return hashlib.sha256(json.dumps(body, sort_keys=True, default=_jsonable).encode()).hexdigest()


def execute(cfg: RunConfig, args) -> int:
    rows, extra = COMMANDS[cfg.command](args, cfg)
    doc = dict(command=cfg.command, parameters=cfg.parameters, rows=rows, result=extra,
               metadata=dict(version=__version__, csv_schema=CSV_SCHEMA_VERSION, config_hash=cfg.hash,
                             seed=cfg.seed),
               timestamp=datetime.now(timezone.utc).isoformat())
    doc["content_hash"] = content_hash(doc)
    text = render(doc, cfg.format)
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _parse(argv)
    except SystemExit as exc:          # argparse usage errors
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    except ParameterError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    params = {k: v for k, v in vars(args).items() if k not in ("format", "output", "config", "seed", "command")}
    cfg = RunConfig(args.command, params, args.output, args.format, args.seed)
    try:
        return execute(cfg, args)
    except (ParameterError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"non-convergence: {exc} (residual {exc.residual:.3g})", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
